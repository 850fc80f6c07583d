use boltzgap_core::acceptance::{Suite, GAP_BOUND};
use boltzgap_core::collision::nu_at_origin;
use boltzgap_core::config::{preset, preset_json, RunConfig, PRESETS};
use boltzgap_core::experiments::{evolve, exp_moment_plateau, povzner, resolvent, transfer, InitialDatum, LinearFixture};
use boltzgap_core::kernels::ell_b;
use boltzgap_core::report::{plot, write_columns, write_json, Series};
use boltzgap_core::spectral::ModeClass;
use boltzgap_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boltzgap", version, about = "Spectral gap and relaxation experiments for the homogeneous Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file, or the name of a shipped preset.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output root (one subdirectory per experiment).
    #[arg(long, global = true, env = "BOLTZGAP_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Recorded in the summaries; execution is single-threaded.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// reproduce-all: evaluate criteria concurrently.
    #[arg(long, global = true)]
    parallel: bool,
    /// evolve: initial datum.
    #[arg(long, global = true, value_enum, default_value_t = Initial::Hermite)]
    initial: Initial,
}

#[derive(Subcommand, Clone, PartialEq)]
enum Command {
    /// Eigenvalue ladder of the linearized operator.
    Spectrum,
    /// Spectral gap against the explicit lower bound and ν(0).
    Gapcheck,
    /// Nonlinear relaxation from a near-equilibrium datum.
    Evolve,
    /// Povzner table, moment cascade and exponential-moment plateau.
    Moments,
    /// Resolvent norms over the sector.
    Resolvent,
    /// Eigenvector transfer between the Gaussian and stretched settings.
    Transfer,
    /// Full acceptance suite on the shipped presets.
    ReproduceAll,
    /// Print a shipped preset.
    Preset { name: String },
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum Initial {
    Maxwellian,
    Hermite,
    Tail,
}

enum Failure {
    Config(String),
    Assertion(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => Failure::Numerical(format!("i/o failure: {e}")),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("{m}");
            ExitCode::from(3)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let spec = cli.config.as_deref().ok_or_else(|| Failure::Config("missing --config <path|preset>".into()))?;
    let path = Path::new(spec);
    let mut cfg = if path.exists() {
        RunConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("cannot read {spec}: {io}")),
            other => Failure::Config(other.to_string()),
        })?
    } else if PRESETS.contains(&spec) {
        preset(spec).map_err(|e| Failure::Config(e.to_string()))?
    } else {
        return Err(Failure::Config(format!("{spec}: no such file or preset (presets: {})", PRESETS.join(", "))));
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Config("invalid configuration at `threads`: must be ≥ 1".into()));
        }
        cfg.threads = t;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>, name: &str) -> Result<PathBuf, Failure> {
    let root = cli.out.clone().or_else(|| cfg.and_then(|c| c.output.clone())).unwrap_or_else(|| PathBuf::from("boltzgap-out"));
    let dir = root.join(name);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn assert_pass(pass: bool, what: &str) -> Result<(), Failure> {
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion(what.into()))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Preset { name } => {
            let text = preset_json(name).ok_or_else(|| Failure::Config(format!("unknown preset `{name}`")))?;
            println!("{text}");
            Ok(())
        }
        Command::ReproduceAll => reproduce_all(cli),
        cmd => {
            let cfg = load_config(cli)?;
            let name = match cmd {
                Command::Spectrum => "spectrum",
                Command::Gapcheck => "gapcheck",
                Command::Evolve => "evolve",
                Command::Moments => "moments",
                Command::Resolvent => "resolvent",
                _ => "transfer",
            };
            let dir = out_dir(cli, Some(&cfg), name)?;
            std::fs::write(dir.join("config.json"), cfg.to_json() + "\n").map_err(Error::from)?;
            match cmd {
                Command::Moments => moments(&cfg, &dir),
                _ => {
                    let fx = LinearFixture::build(&cfg)?;
                    match cmd {
                        Command::Spectrum => spectrum(&fx, &dir),
                        Command::Gapcheck => gapcheck(&fx, &dir),
                        Command::Evolve => evolve_cmd(&fx, &dir, cli.initial),
                        Command::Resolvent => resolvent_cmd(&fx, &dir),
                        _ => transfer_cmd(&fx, &dir),
                    }
                }
            }
        }
    }
}

fn spectrum(fx: &LinearFixture, dir: &Path) -> Result<(), Failure> {
    write_json(&dir.join("summary.json"), &fx.report)?;
    fx.spec.write_ladder_csv(&dir.join("eigenvalues.csv"))?;
    let top = fx.spec.values.len().min(200);
    let series: Vec<Series> = [ModeClass::Null, ModeClass::Discrete, ModeClass::Band]
        .iter()
        .map(|c| {
            let (x, y): (Vec<f64>, Vec<f64>) = (0..top)
                .filter(|&k| fx.spec.class[k] == *c)
                .map(|k| (k as f64, fx.spec.values[k]))
                .unzip();
            Series::scatter(c.label(), x, y)
        })
        .collect();
    plot(&dir.join("ladder"), "eigenvalue ladder", "index", "eigenvalue", &series, false)?;
    let f = &fx.report.flags;
    println!("gap λ = {:.6}, ν₀ = {:.6}, symmetry defect {:.2e}", fx.report.gap, fx.report.nu0, fx.report.symmetry_defect);
    assert_pass(f.gap_positive && f.gap_below_nu0 && f.null_cluster_size_ok, "spectrum flags")
}

fn gapcheck(fx: &LinearFixture, dir: &Path) -> Result<(), Failure> {
    let r = &fx.report;
    let nu0_ref = nu_at_origin(&fx.op.kernel, ell_b(&fx.op.kernel)?);
    let nu0_err = (r.nu0 - nu0_ref).abs() / nu0_ref;
    let bound = GAP_BOUND * 0.9;
    let pass = r.gap >= bound && r.gap < r.nu0 && nu0_err <= 0.02;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "lambda": r.gap, "nu0": r.nu0, "nu0_reference": nu0_ref, "nu0_rel_error": nu0_err,
            "bound": GAP_BOUND, "bound_with_margin": bound, "bound_with_kernel_constants": r.lower_bound_explicit,
            "symmetry_defect": r.symmetry_defect, "pass": pass
        }),
    )?;
    println!("λ = {:.6} (bound {GAP_BOUND}), ν₀ = {:.6} (reference {:.6}), pass = {pass}", r.gap, r.nu0, nu0_ref);
    assert_pass(pass, "gap check")
}

fn evolve_cmd(fx: &LinearFixture, dir: &Path, initial: Initial) -> Result<(), Failure> {
    let ex = &fx.cfg.experiment;
    let datum = match initial {
        Initial::Maxwellian => InitialDatum::Maxwellian,
        Initial::Hermite => InitialDatum::Hermite { eps: ex.eps },
        Initial::Tail => InitialDatum::PolynomialTail { eps: ex.eps, q: ex.tail_q },
    };
    let (rep, traj) = evolve(fx, datum, fx.cfg.seed, initial == Initial::Hermite)?;
    traj.write_csv(&dir.join("trajectory.csv"))?;
    let t = traj.times();
    let y = traj.column(|d| d.l1_dist);
    let t0 = traj.diagnostics.iter().find(|d| d.l1_m2_dist <= ex.eps).map(|d| d.t);
    let h_ok = rep.max_h_increase_rate <= 1e-8 * rep.h_initial.abs();
    let pass = match rep.fit {
        Some(_) => rep.rate_error.is_some_and(|e| e <= 0.1) && h_ok,
        None => y.iter().all(|v| *v <= 1e-12),
    };
    write_json(
        &dir.join("summary.json"),
        &json!({
            "mu_hat": rep.fit.as_ref().map(|f| f.mu), "c_hat": rep.fit.as_ref().map(|f| f.c),
            "lambda_ref": rep.lambda, "t0": t0, "report": rep, "pass": pass
        }),
    )?;
    let mut series = vec![Series::line("‖f − M‖₁", t.clone(), y.clone())];
    if let Some(f) = &rep.fit {
        series.push(Series::line("fit", t.clone(), t.iter().map(|s| f.c * (-f.mu * s).exp()).collect()));
        let anchor = y[0];
        series.push(Series::line("slope −λ", t.clone(), t.iter().map(|s| anchor * (-rep.lambda * s).exp()).collect()));
    }
    plot(&dir.join("decay"), "relaxation", "t", "L1 distance", &series, true)?;
    match &rep.fit {
        Some(f) => println!("μ̂ = {:.5}, λ = {:.5}, decades {:.2}, pass = {pass}", f.mu, rep.lambda, rep.decades),
        None => println!("equilibrium datum: max distance {:.2e}, pass = {pass}", y.iter().cloned().fold(0.0, f64::max)),
    }
    assert_pass(pass, "relaxation rate")
}

fn moments(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let pov = povzner(cfg, cfg.seed)?;
    let fx = LinearFixture::build(cfg)?;
    let pl = exp_moment_plateau(&fx, cfg.seed)?;
    let pass = pov.all_below_one && pov.nonincreasing && pov.k_energy_max <= 1e-10 && pl.pass;
    write_json(&dir.join("summary.json"), &json!({ "povzner": pov, "plateau": pl, "pass": pass }))?;
    write_columns(
        &dir.join("povzner.csv"),
        &["p", "sp", "alpha_hat", "events_ge_one", "shape_constant"],
        &[
            pov.rows.iter().map(|r| r.p).collect(),
            pov.rows.iter().map(|r| r.sp).collect(),
            pov.rows.iter().map(|r| r.alpha_hat).collect(),
            pov.rows.iter().map(|r| r.events_ge_one as f64).collect(),
            pov.rows.iter().map(|r| r.shape_constant).collect(),
        ],
    )?;
    let series: Vec<Series> =
        pl.rows.iter().map(|r| Series::line(&format!("ε = {}", r.eps), r.t.clone(), r.exp_moment.clone())).collect();
    plot(&dir.join("plateau"), "exponential moment", "t", "∫ f exp(a|v|^s)", &series, false)?;
    for r in &pov.rows {
        println!("p = {:>4}: α̂ = {:.5} ({} events ≥ 1)", r.p, r.alpha_hat, r.events_ge_one);
    }
    println!("plateau spread {:.3}, pass = {pass}", pl.spread);
    assert_pass(pass, "Povzner / moment checks")
}

fn resolvent_cmd(fx: &LinearFixture, dir: &Path) -> Result<(), Failure> {
    let r = resolvent(fx)?;
    write_json(&dir.join("summary.json"), &r)?;
    let inv: Vec<f64> = r.rows.iter().map(|x| 1.0 / x.dist).collect();
    write_columns(
        &dir.join("points.csv"),
        &["re", "im", "l1_norm", "l2_norm", "dist"],
        &[
            r.rows.iter().map(|x| x.re).collect(),
            r.rows.iter().map(|x| x.im).collect(),
            r.rows.iter().map(|x| x.l1_norm).collect(),
            r.rows.iter().map(|x| x.l2_norm).collect(),
            r.rows.iter().map(|x| x.dist).collect(),
        ],
    )?;
    plot(
        &dir.join("norms"),
        "resolvent norms",
        "1/dist",
        "norm",
        &[
            Series::scatter("L1(m)", inv.clone(), r.rows.iter().map(|x| x.l1_norm).collect()),
            Series::scatter("L2(M)", inv, r.rows.iter().map(|x| x.l2_norm).collect()),
        ],
        false,
    )?;
    println!("{} points, identity error {:.2e}, pass = {}", r.rows.len(), r.identity_error, r.pass);
    assert_pass(r.pass && r.rows.len() >= 40, "resolvent bounds")
}

fn transfer_cmd(fx: &LinearFixture, dir: &Path) -> Result<(), Failure> {
    let reps = transfer(fx, 1e-2, 1e-2)?;
    write_json(&dir.join("summary.json"), &reps)?;
    for r in &reps {
        println!(
            "(a, s) = ({}, {}): {} modes, max residual {:.2e}, max match {:.2e}, unmatched {}, pass = {}",
            r.a,
            r.s,
            r.rows.len(),
            r.max_residual,
            r.max_match_error,
            r.unmatched.len(),
            r.pass
        );
    }
    assert_pass(reps.iter().all(|r| r.pass), "eigenvector transfer")
}

fn reproduce_all(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(20_240_611);
    let mut n3 = preset("hard_sphere_n3")?;
    let mut n2 = preset("hard_potential_gamma_half_n2")?;
    if let Some(t) = cli.threads {
        n3.threads = t;
        n2.threads = t;
    }
    let dir = out_dir(cli, None, "reproduce-all")?;
    let suite = Suite::with_configs(seed, n3, n2);
    let criteria = if cli.parallel {
        let suite = &suite;
        std::thread::scope(|s| {
            let handles: Vec<_> = (1..=10).map(|k| s.spawn(move || suite.criterion(k))).collect();
            handles.into_iter().map(|h| h.join().expect("criterion thread")).collect::<Vec<_>>()
        })
    } else {
        (1..=10).map(|k| suite.criterion(k)).collect()
    };
    for c in &criteria {
        println!("{}", c.line());
        let sub = dir.join(format!("criterion_{:02}", c.id));
        std::fs::create_dir_all(&sub).map_err(Error::from)?;
        write_json(&sub.join("result.json"), c)?;
    }
    let report = boltzgap_core::acceptance::AcceptanceReport {
        seed,
        passed: criteria.iter().filter(|c| c.pass).count(),
        failed: criteria.iter().filter(|c| !c.pass).count(),
        criteria,
    };
    write_json(&dir.join("acceptance.json"), &report)?;
    std::fs::write(dir.join("acceptance.md"), report.markdown()).map_err(Error::from)?;
    assert_pass(report.failed == 0, &format!("{} of 10 criteria failed", report.failed))
}
