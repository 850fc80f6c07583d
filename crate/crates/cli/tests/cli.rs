use std::path::Path;
use std::process::{Command, Output};

fn boltzgap(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boltzgap")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    let cfg = serde_json::json!({
        "kernel": { "dimension": 2, "gamma": 0.5 },
        "grid": { "n": 21, "extent": 5.0 },
        "sphere": { "kind": "circle", "points": 16 },
        "weight": { "a": 0.5, "s": 0.1 },
        "solver": { "dt": 0.25, "t_end": 1.0 }
    });
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_gamma_exits_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"kernel": {"dimension": 3}, "grid": {"n": 15, "extent": 4.5}, "weight": {"a": 0.5, "s": 0.2}}"#).unwrap();
    let out = boltzgap(&["gapcheck", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kernel") && err.contains("gamma"), "{err}");
}

#[test]
fn maxwell_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = boltzgap(&["spectrum", "--config", "maxwell_rejected"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel.gamma"));
}

#[test]
fn preset_prints_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = boltzgap(&["preset", "hard_sphere_n3"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kernel"]["gamma"], 1.0);
    assert_eq!(boltzgap(&["preset", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn equilibrium_evolution_stays_flat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = boltzgap(&["evolve", "--config", &cfg, "--initial", "maxwellian"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sub = dir.path().join("evolve");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sub.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    for f in ["config.json", "trajectory.csv", "decay.svg", "decay.csv"] {
        assert!(sub.join(f).exists(), "{f}");
    }
}

#[test]
fn summaries_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = boltzgap(&["spectrum", "--config", &cfg, "--seed", "5"], out);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["summary.json", "eigenvalues.csv", "ladder.csv"] {
        let x = std::fs::read(a.join("spectrum").join(f)).unwrap();
        let y = std::fs::read(b.join("spectrum").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
}
