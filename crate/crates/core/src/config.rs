//! Run configuration (JSON), validation with field paths, and shipped presets.

use crate::collision::CollisionOperator;
use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::kernels::{AngularProfile, CollisionKernelSpec};
use crate::velocity_space::{Interpolation, SphereQuadrature, SphereRule, VelocityGrid, WeightFunction};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub dimension: usize,
    pub gamma: f64,
    #[serde(default = "unit")]
    pub c_phi: f64,
    #[serde(default = "hard_sphere")]
    pub angular: AngularProfile,
    #[serde(default = "yes")]
    pub normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub extent: f64,
    #[serde(default)]
    pub interpolation: Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub a: f64,
    pub s: f64,
}

impl WeightConfig {
    pub fn weight(&self) -> WeightFunction {
        WeightFunction::Stretched { a: self.a, s: self.s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// δ ladder for the mollified gains.
    pub deltas: Vec<f64>,
    /// Amplitude of the near-equilibrium perturbation.
    pub eps: f64,
    /// Exponent set for the Povzner table.
    pub p_set: Vec<f64>,
    /// s used by the moment cascade (default: just below γ/2).
    pub moment_s: Option<f64>,
    pub povzner_samples: usize,
    /// μ = fraction · λ for the resolvent sector.
    pub sector_mu_fraction: f64,
    /// Extra weight for the transfer check.
    pub second_weight: Option<WeightConfig>,
    pub semigroup_steps: usize,
    /// Polynomial-tail data ⟨v⟩^{−q} at these amplitudes.
    pub tail_q: f64,
    pub tail_eps: Vec<f64>,
    /// Random fields for the conservation / H-theorem check.
    pub random_fields: usize,
    /// Sphere rule for the δ study (must resolve the angular windows).
    pub delta_sphere: Option<SphereRule>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            deltas: vec![0.4, 0.2, 0.1, 0.05],
            eps: 0.05,
            p_set: vec![2.0, 5.0, 10.0, 20.0],
            moment_s: None,
            povzner_samples: 10_000,
            sector_mu_fraction: 0.5,
            second_weight: None,
            semigroup_steps: 25,
            tail_q: 6.0,
            tail_eps: vec![0.02, 0.05],
            random_fields: 50,
            delta_sphere: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub sphere: Option<SphereRule>,
    pub weight: WeightConfig,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub threads: usize,
}

fn unit() -> f64 {
    1.0
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn hard_sphere() -> AngularProfile {
    AngularProfile::HardSphere
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn kernel_spec(&self) -> Result<CollisionKernelSpec> {
        let k = &self.kernel;
        CollisionKernelSpec::new(k.dimension, k.gamma, k.c_phi, k.angular.clone(), k.normalized)
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.kernel.dimension, self.grid.n, self.grid.extent)
    }

    pub fn sphere_rule(&self) -> SphereRule {
        self.sphere.clone().unwrap_or(match self.kernel.dimension {
            2 => SphereRule::Circle { points: 32 },
            _ => SphereRule::GaussProduct { n_theta: 16, n_phi: 32 },
        })
    }

    pub fn operator(&self) -> Result<CollisionOperator> {
        let sphere = SphereQuadrature::new(self.kernel.dimension, self.sphere_rule())?;
        CollisionOperator::new(self.kernel_spec()?, self.velocity_grid()?, sphere, self.grid.interpolation, true)
    }

    pub fn moment_s(&self) -> f64 {
        self.experiment.moment_s.unwrap_or(0.9 * self.kernel.gamma / 2.0)
    }

    /// Cross-field admissibility.
    pub fn validate(&self) -> Result<()> {
        let kernel = self.kernel_spec()?;
        let grid = self.velocity_grid().map_err(|e| match e {
            Error::Config { path, msg } => Error::config(if path == "grid.points_per_axis" { "grid.n".into() } else { path }, msg),
            other => other,
        })?;
        SphereQuadrature::new(grid.dim, self.sphere_rule()).map_err(|e| match e {
            Error::Config { msg, .. } => Error::config("sphere", msg),
            other => other,
        })?;
        WeightFunction::stretched(self.weight.a, self.weight.s, kernel.gamma)?;
        if let Some(w) = self.experiment.second_weight {
            WeightFunction::stretched(w.a, w.s, kernel.gamma)
                .map_err(|e| Error::config("experiment.second_weight", e.to_string()))?;
        }
        if let Some(s) = &self.solver {
            if !(s.dt > 0.0 && s.t_end > 0.0 && s.dt <= s.t_end) {
                return Err(Error::config("solver.dt", "need 0 < dt ≤ t_end"));
            }
            if s.snapshot_stride == 0 {
                return Err(Error::config("solver.snapshot_stride", "must be ≥ 1"));
            }
            if let Some(r) = s.cutoff_radius {
                if !(r > 0.0 && r <= self.grid.extent) {
                    return Err(Error::config("solver.cutoff_radius", "must lie in (0, R]"));
                }
            }
        }
        let ex = &self.experiment;
        if let Some(d) = ex.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::config("experiment.deltas", format!("δ = {d} not in (0, 1)")));
        }
        let s = self.moment_s();
        if !(s > 0.0 && s < kernel.gamma / 2.0) {
            return Err(Error::config("experiment.moment_s", format!("s = {s} must lie in (0, γ/2)")));
        }
        if !(ex.eps > 0.0 && ex.eps < 1.0) {
            return Err(Error::config("experiment.eps", "must lie in (0, 1)"));
        }
        if !(ex.sector_mu_fraction > 0.0 && ex.sector_mu_fraction < 1.0) {
            return Err(Error::config("experiment.sector_mu_fraction", "must lie in (0, 1)"));
        }
        if ex.p_set.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::config("experiment.p_set", "exponents must be nonnegative"));
        }
        if self.threads == 0 {
            return Err(Error::config("threads", "must be ≥ 1"));
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 3] = ["hard_sphere_n3", "hard_potential_gamma_half_n2", "maxwell_rejected"];

/// Shipped configurations. `maxwell_rejected` (γ = 0) is deliberately invalid.
pub fn preset_json(name: &str) -> Option<String> {
    let v = match name {
        "hard_sphere_n3" => serde_json::json!({
            "kernel": { "dimension": 3, "gamma": 1.0 },
            "grid": { "n": 15, "extent": 4.5 },
            "sphere": { "kind": "gauss_product", "n_theta": 8, "n_phi": 16 },
            "weight": { "a": 0.5, "s": 0.2 },
            "solver": { "dt": 0.1, "t_end": 2.0, "cutoff_radius": 3.6 },
            "experiment": { "moment_s": 0.45 }
        }),
        "hard_potential_gamma_half_n2" => serde_json::json!({
            "kernel": { "dimension": 2, "gamma": 0.5 },
            "grid": { "n": 41, "extent": 5.0 },
            "sphere": { "kind": "circle", "points": 32 },
            "weight": { "a": 0.5, "s": 0.1 },
            "solver": { "dt": 0.25, "t_end": 6.0 },
            "experiment": {
                "second_weight": { "a": 0.25, "s": 0.2 },
                "delta_sphere": { "kind": "graded", "first_panel": 0.02, "order": 6, "n_phi": 0 }
            }
        }),
        "maxwell_rejected" => serde_json::json!({
            "kernel": { "dimension": 3, "gamma": 0.0 },
            "grid": { "n": 15, "extent": 4.5 },
            "weight": { "a": 0.5, "s": 0.2 }
        }),
        _ => return None,
    };
    Some(serde_json::to_string_pretty(&v).expect("preset serializes"))
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = preset_json(name).ok_or_else(|| Error::config("<preset>", format!("unknown preset `{name}`")))?;
    RunConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_or_reject() {
        preset("hard_sphere_n3").unwrap();
        preset("hard_potential_gamma_half_n2").unwrap();
        match preset("maxwell_rejected") {
            Err(Error::Config { path, .. }) => assert_eq!(path, "kernel.gamma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_field_is_located() {
        let text = r#"{"kernel": {"dimension": 3}, "grid": {"n": 15, "extent": 4.5}, "weight": {"a": 0.5, "s": 0.2}}"#;
        match RunConfig::from_json(text) {
            Err(Error::Config { path, msg }) => {
                assert_eq!(path, "kernel");
                assert!(msg.contains("gamma"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weight_exponent_checked_against_gamma() {
        let mut cfg = preset("hard_potential_gamma_half_n2").unwrap();
        cfg.weight.s = 0.3;
        match cfg.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "weight.s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let cfg = preset("hard_sphere_n3").unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
