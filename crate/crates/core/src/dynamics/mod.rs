//! Nonlinear relaxation near equilibrium, decay-rate measurement, moment
//! diagnostics (Povzner, z_p), exponential moments and the Gronwall closure.
//!
//! The equation ∂f/∂t = Q(f,f) is integrated in the perturbative variable
//! ψ = (f − M)/√M: ψ' = L̃ψ + Γ(ψ,ψ), with the linear part (symmetrized,
//! invariants projected out) propagated exactly from its eigendecomposition
//! and the quadratic part by a Lawson (integrating-factor) RK4 step.

mod gronwall;
mod initial;
mod moments;

pub use crate::fit::{fit_decay_rate, DecayFit};
pub use gronwall::{bilinear_gamma_constant, gronwall_certificate, BilinearReport, GronwallReport};
pub use initial::{hermite_perturbation, polynomial_tail_perturbation};
pub use moments::{exp_moment, moment_table, povzner_check, MomentRow, PovznerReport, PovznerRow};

use crate::collision::{entropy_production_of, CollisionOperator};
use crate::error::{Error, Result};
use crate::linearized::{project_vec, SymmetricL};
use crate::spectral::SymmetricSpectrum;
use crate::velocity_space::{DistributionField, VelocityGrid, WeightFunction};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Remove the invariant moments of every nonlinear stage.
    #[serde(default = "yes")]
    pub projection: bool,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    /// Radius of the ball carrying the nonlinear term (default: R).
    #[serde(default)]
    pub cutoff_radius: Option<f64>,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl SolverConfig {
    /// Step budget: Δt·λ ≤ 0.5 on the slowest linear mode.
    pub fn check(&self, lambda: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.t_end > 0.0) {
            return Err(Error::config("solver.dt", "dt and t_end must be positive"));
        }
        if self.dt * lambda > 0.5 {
            return Err(Error::config("solver.dt", format!("dt·λ = {:.3} exceeds the 0.5 budget", self.dt * lambda)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::config("solver.snapshot_stride", "must be ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub l1_dist: f64,
    pub l1_m_dist: f64,
    pub l1_m2_dist: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub mass: f64,
    pub energy: f64,
    pub exp_moment: f64,
    /// L¹ size of the invariant correction applied to the nonlinear term.
    pub projection_correction: f64,
    pub negative_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub weight: WeightFunction,
    pub diagnostics: Vec<StepDiagnostics>,
    /// (t, ψ) at the snapshot stride.
    #[serde(skip)]
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.t).collect()
    }

    pub fn column(&self, f: impl Fn(&StepDiagnostics) -> f64) -> Vec<f64> {
        self.diagnostics.iter().map(f).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,l1_dist,l1_m_dist,l1_m2_dist,H,D,mass,energy,exp_moment")?;
        for d in &self.diagnostics {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.14e},{:.10e},{:.14e},{:.14e},{:.14e}",
                d.t, d.l1_dist, d.l1_m_dist, d.l1_m2_dist, d.h, d.d, d.mass, d.energy, d.exp_moment
            )?;
        }
        Ok(())
    }

    /// Largest increase of H between consecutive records, divided by Δt.
    pub fn max_h_increase_rate(&self) -> f64 {
        self.diagnostics
            .windows(2)
            .map(|w| (w[1].h - w[0].h) / (w[1].t - w[0].t))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Near-equilibrium integrator. The exponential moment and weighted distances
/// use the stretched weight m = exp(−a|v|^s).
pub struct PerturbativeSolver<'a> {
    op: CollisionOperator,
    sl: &'a SymmetricL,
    spec: &'a SymmetricSpectrum,
    sw: Vec<f64>,
    sm: Vec<f64>,
    m: Vec<f64>,
    e_weight: Vec<f64>,
    weight: WeightFunction,
}

impl<'a> PerturbativeSolver<'a> {
    /// `op` supplies the nonlinear term, evaluated on the ball |v| ≤ `cutoff`.
    pub fn new(
        op: &CollisionOperator,
        sl: &'a SymmetricL,
        spec: &'a SymmetricSpectrum,
        weight: WeightFunction,
        cutoff: f64,
    ) -> Result<Self> {
        let (a, s) = match weight {
            WeightFunction::Stretched { a, s } => (a, s),
            _ => return Err(Error::domain("dynamics diagnostics need a stretched weight m")),
        };
        let op = op.clone().with_cutoff(cutoff);
        let grid = &op.grid;
        let sw = grid.weights().iter().map(|w| w.sqrt()).collect();
        let sm = op.sqrt_maxwellian().to_vec();
        let m = grid.speeds2().iter().map(|&v2| weight.eval_sq(v2)).collect();
        let e_weight = grid.speeds2().iter().map(|&v2| (a * v2.powf(0.5 * s)).exp()).collect();
        Ok(PerturbativeSolver { op, sl, spec, sw, sm, m, e_weight, weight })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.op.grid
    }

    /// e^{τL̃} χ through the eigendecomposition.
    fn flow(&self, chi: &[f64], tau: f64) -> Vec<f64> {
        let n = chi.len();
        let u = &self.spec.vectors;
        let x = Mat::<f64>::from_fn(n, 1, |i, _| chi[i]);
        let c = u.transpose() * &x;
        let c = Mat::<f64>::from_fn(n, 1, |k, _| c[(k, 0)] * (tau * self.spec.values[k]).exp());
        let y = u * &c;
        (0..n).map(|i| y[(i, 0)]).collect()
    }

    /// ‖f − M‖_{L¹(m⁻¹)} under the linear flow alone, from ψ₀ at times `t`.
    pub fn linear_norms(&self, psi0: &[f64], t: &[f64]) -> Vec<f64> {
        let w = self.grid().weights();
        let chi: Vec<f64> = psi0.iter().zip(&self.sw).map(|(p, s)| p * s).collect();
        t.iter()
            .map(|&s| {
                let x = self.flow(&chi, s);
                (0..x.len()).map(|i| w[i] * (self.sm[i] * x[i] / self.sw[i]).abs() / self.m[i]).sum()
            })
            .collect()
    }

    /// P √w M^{−1/2} Q(√M ψ, √M ψ) in χ-coordinates, with the L¹ size of the
    /// invariant correction.
    fn nonlinear(&self, chi: &[f64], project: bool) -> (Vec<f64>, f64) {
        let n = chi.len();
        let g: Vec<f64> = (0..n).map(|i| self.sm[i] * chi[i] / self.sw[i]).collect();
        let gain = self.op.q_plus_raw(&g, &g);
        let loss = self.op.q_minus_raw(&g, &g);
        let mut out: Vec<f64> = (0..n).map(|i| self.sw[i] * (gain[i] - loss[i]) / self.sm[i]).collect();
        let mut corr = 0.0;
        if project {
            let before = out.clone();
            project_vec(&mut out, &self.sl.basis);
            corr = (0..n).map(|i| self.sw[i] * self.sm[i] * (before[i] - out[i]).abs()).sum();
        }
        (out, corr)
    }

    fn linear_apply(&self, chi: &[f64]) -> Vec<f64> {
        let n = chi.len();
        let x = Mat::<f64>::from_fn(n, 1, |i, _| chi[i]);
        let y = &self.sl.projected * &x;
        (0..n).map(|i| y[(i, 0)]).collect()
    }

    fn diagnostics(&self, t: f64, chi: &[f64], nl: &[f64], corr: f64) -> StepDiagnostics {
        let grid = self.grid();
        let n = chi.len();
        let w = grid.weights();
        let lin = self.linear_apply(chi);
        let mut f = vec![0.0; n];
        let mut q = vec![0.0; n];
        let (mut l1d, mut l1m, mut l1m2, mut h, mut mass, mut energy, mut em) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let mut negative = 0;
        for i in 0..n {
            let pert = self.sm[i] * chi[i] / self.sw[i];
            f[i] = self.sm[i] * self.sm[i] + pert;
            q[i] = self.sm[i] * (lin[i] + nl[i]) / self.sw[i];
            l1d += w[i] * pert.abs();
            l1m += w[i] * pert.abs() / self.m[i];
            l1m2 += w[i] * pert.abs() / (self.m[i] * self.m[i]);
            if f[i] > 0.0 {
                h += w[i] * f[i] * f[i].ln();
            } else {
                negative += 1;
            }
            mass += w[i] * f[i];
            energy += 0.5 * w[i] * grid.speed2(i) * f[i];
            em += w[i] * f[i] * self.e_weight[i];
        }
        let (d, _) = entropy_production_of(grid, &f, &q);
        StepDiagnostics {
            t,
            l1_dist: l1d,
            l1_m_dist: l1m,
            l1_m2_dist: l1m2,
            h,
            d,
            mass,
            energy,
            exp_moment: em,
            projection_correction: corr,
            negative_nodes: negative,
        }
    }

    /// Integrates from f0 (plain node values).
    pub fn integrate(&self, f0: &DistributionField, cfg: &SolverConfig) -> Result<Trajectory> {
        let grid = self.grid();
        f0.check_grid(grid)?;
        if !f0.is_physical() {
            return Err(Error::domain("initial datum must be nonnegative and finite"));
        }
        cfg.check(self.spec.gap())?;
        let n = grid.len();
        let mut chi: Vec<f64> = (0..n).map(|i| self.sw[i] * (f0.values[i] - self.sm[i] * self.sm[i]) / self.sm[i]).collect();
        let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
        let h = cfg.t_end / steps as f64;
        let mut traj = Trajectory { weight: self.weight, diagnostics: Vec::with_capacity(steps + 1), snapshots: Vec::new() };
        let (mut k1, mut corr) = self.nonlinear(&chi, cfg.projection);
        for step in 0..=steps {
            let t = step as f64 * h;
            let d = self.diagnostics(t, &chi, &k1, corr);
            if !d.l1_dist.is_finite() || d.l1_dist > 1e3 * d.mass.abs().max(1.0) {
                return Err(Error::numerical(format!("blow-up at t = {t:.4}")));
            }
            traj.diagnostics.push(d);
            if step % cfg.snapshot_stride == 0 || step == steps {
                let psi = (0..n).map(|i| chi[i] / self.sw[i]).collect();
                traj.snapshots.push((t, psi));
            }
            if step == steps {
                break;
            }
            // Lawson RK4 with E_h = e^{(h/2)L̃}, E = e^{hL̃}.
            let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + a * q).collect() };
            let eh_chi = self.flow(&chi, 0.5 * h);
            let (k2, _) = self.nonlinear(&self.flow(&axpy(&chi, 0.5 * h, &k1), 0.5 * h), cfg.projection);
            let (k3, _) = self.nonlinear(&axpy(&eh_chi, 0.5 * h, &k2), cfg.projection);
            let e_chi = self.flow(&eh_chi, 0.5 * h);
            let (k4, _) = self.nonlinear(&axpy(&e_chi, h, &self.flow(&k3, 0.5 * h)), cfg.projection);
            let ek1 = self.flow(&k1, h);
            let k23: Vec<f64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
            let eh23 = self.flow(&k23, 0.5 * h);
            chi = (0..n).map(|i| e_chi[i] + h / 6.0 * (ek1[i] + 2.0 * eh23[i] + k4[i])).collect();
            let next = self.nonlinear(&chi, cfg.projection);
            k1 = next.0;
            corr = next.1;
        }
        Ok(traj)
    }
}
