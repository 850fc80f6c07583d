//! Experiment drivers shared by the command-line front end and the
//! acceptance suite. Each driver returns a serializable report; pass/fail
//! decisions are made by the caller.

use crate::collision::{conservation_projection, entropy_production_of, relative_defects, CollisionOperator};
use crate::config::RunConfig;
use crate::dynamics::{
    bilinear_gamma_constant, exp_moment, fit_decay_rate, gronwall_certificate, hermite_perturbation, moment_table,
    polynomial_tail_perturbation, povzner_check, BilinearReport, DecayFit, GronwallReport, MomentRow, PerturbativeSolver,
    PovznerReport, SolverConfig, Trajectory,
};
use crate::error::{Error, Result};
use crate::linearized::{assemble_l_m, assemble_psi_parts, delta_ladder, symmetric_l, DeltaRow, PsiParts, Scaling, SymmetricL};
use crate::spectral::{
    eigendecompose, eigenvector_transfer_check, general_eigenvalues, resolvent_scan, sector_points, semigroup_decay,
    ResolventReport, SemigroupReport, SpectrumOptions, SpectrumReport, SymmetricSpectrum, TransferReport,
};
use crate::velocity_space::{maxwellian_field, maxwellian_with, DistributionField, SphereQuadrature, VelocityGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Assembled linearized operator with its symmetric spectrum.
pub struct LinearFixture {
    pub cfg: RunConfig,
    pub op: CollisionOperator,
    pub parts: PsiParts,
    pub sl: SymmetricL,
    pub report: SpectrumReport,
    pub spec: SymmetricSpectrum,
    pub assembly_secs: f64,
    pub total_secs: f64,
}

impl LinearFixture {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let start = Instant::now();
        let op = cfg.operator()?;
        let parts = assemble_psi_parts(&op);
        let assembly_secs = start.elapsed().as_secs_f64();
        let sl = symmetric_l(&op.grid, &parts);
        let (report, spec) = eigendecompose(&op.grid, &op.kernel, &sl, &parts.nu, &SpectrumOptions::default())?;
        let total_secs = start.elapsed().as_secs_f64();
        Ok(LinearFixture { cfg: cfg.clone(), op, parts, sl, report, spec, assembly_secs, total_secs })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.op.grid
    }

    pub fn lambda(&self) -> f64 {
        self.report.gap
    }

    pub fn scaling(&self) -> Scaling {
        Scaling::Stretched { a: self.cfg.weight.a, s: self.cfg.weight.s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    Maxwellian,
    /// M(1 + εχ) with χ a moment-neutral Hermite combination.
    Hermite { eps: f64 },
    /// M + ε⟨v⟩^{−q} (moment-neutral).
    PolynomialTail { eps: f64, q: f64 },
}

impl InitialDatum {
    pub fn build(&self, grid: &VelocityGrid, seed: u64) -> Result<DistributionField> {
        match *self {
            InitialDatum::Maxwellian => Ok(maxwellian_field(grid)),
            InitialDatum::Hermite { eps } => hermite_perturbation(grid, eps, &mut ChaCha8Rng::seed_from_u64(seed)),
            InitialDatum::PolynomialTail { eps, q } => polynomial_tail_perturbation(grid, eps, q),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveReport {
    pub datum: InitialDatum,
    pub solver: SolverConfig,
    pub cutoff_radius: f64,
    pub lambda: f64,
    /// None when f0 = M (nothing to fit).
    pub fit: Option<DecayFit>,
    pub window: (f64, f64),
    /// log₁₀ of the drop of ‖f − M‖₁ across the window.
    pub decades: f64,
    pub rate_error: Option<f64>,
    pub h_initial: f64,
    pub max_h_increase_rate: f64,
    pub max_conservation_drift: f64,
    pub max_negative_nodes: usize,
    pub gronwall: Option<GronwallReport>,
    pub bilinear: Option<BilinearReport>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

/// Integrates from the given datum and measures the relaxation rate on the
/// window [T/4, T].
pub fn evolve(fx: &LinearFixture, datum: InitialDatum, seed: u64, with_gronwall: bool) -> Result<(EvolveReport, Trajectory)> {
    let start = Instant::now();
    let cfg = fx.cfg.solver.ok_or_else(|| Error::config("solver", "evolve needs a solver block"))?;
    let grid = fx.grid();
    let cutoff = cfg.cutoff_radius.unwrap_or(grid.extent);
    let solver = PerturbativeSolver::new(&fx.op, &fx.sl, &fx.spec, fx.cfg.weight.weight(), cutoff)?;
    let f0 = datum.build(grid, seed)?;
    let traj = solver.integrate(&f0, &cfg)?;
    let t = traj.times();
    let y = traj.column(|d| d.l1_dist);
    let t_end = *t.last().unwrap();
    let window = (0.25 * t_end, t_end);
    let lambda = fx.lambda();
    let (fit, decades) = if y[0] > 1e-13 {
        let ia = t.iter().position(|&s| s >= window.0 - 1e-12).unwrap_or(0);
        let fit = fit_decay_rate(&t, &y, window)?;
        (Some(fit), (y[ia] / y[y.len() - 1]).log10())
    } else {
        (None, 0.0)
    };
    let rate_error = fit.as_ref().map(|f| (f.mu - lambda).abs() / lambda);
    let d0 = &traj.diagnostics[0];
    let drift = traj
        .diagnostics
        .iter()
        .map(|d| ((d.mass - d0.mass) / d0.mass).abs().max(((d.energy - d0.energy) / d0.energy).abs()))
        .fold(0.0, f64::max);
    let negatives = traj.diagnostics.iter().map(|d| d.negative_nodes).max().unwrap_or(0);

    let (gronwall, bilinear) = if with_gronwall && fit.is_some() {
        let (g, b) = gronwall_closure(fx, &solver, &traj, cutoff, lambda)?;
        (Some(g), Some(b))
    } else {
        (None, None)
    };
    let report = EvolveReport {
        datum,
        solver: cfg,
        cutoff_radius: cutoff,
        lambda,
        fit,
        window,
        decades,
        rate_error,
        h_initial: d0.h,
        max_h_increase_rate: traj.max_h_increase_rate(),
        max_conservation_drift: drift,
        max_negative_nodes: negatives,
        gronwall,
        bilinear,
        runtime_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, traj))
}

/// Closure constants along a trajectory, in y(t) = ‖f − M‖_{L¹(m⁻¹)}:
/// a from the linear flow of the same datum, b = a·Ĉ₁₁·max(‖g‖_{L¹(m⁻¹)}/‖g‖₁)^{1/2}
/// with Ĉ₁₁ measured on the trajectory snapshots, μ = 0.9λ, θ = ½.
fn gronwall_closure(
    fx: &LinearFixture,
    solver: &PerturbativeSolver,
    traj: &Trajectory,
    cutoff: f64,
    lambda: f64,
) -> Result<(GronwallReport, BilinearReport)> {
    let grid = fx.grid();
    let mu = 0.9 * lambda;
    let t = traj.times();
    let y = traj.column(|d| d.l1_m_dist);
    let psi0 = &traj.snapshots[0].1;
    let lin = solver.linear_norms(psi0, &t);
    let a = t.iter().zip(&lin).map(|(s, v)| v * (mu * s).exp() / lin[0]).fold(1.0, f64::max);
    let rho = traj.diagnostics.iter().map(|d| (d.l1_m2_dist / d.l1_m_dist).sqrt()).fold(0.0, f64::max);
    let m = fx.cfg.weight.weight().on_grid(grid);
    let sm = fx.op.sqrt_maxwellian();
    let k = traj.snapshots.len();
    let samples: Vec<Vec<f64>> = [0, k / 3, (2 * k) / 3]
        .iter()
        .map(|&j| {
            let psi = &traj.snapshots[j.min(k - 1)].1;
            (0..grid.len()).map(|i| sm[i] * psi[i] / m[i]).collect()
        })
        .collect();
    let bil = bilinear_gamma_constant(&fx.op.clone().with_cutoff(cutoff), &fx.cfg.weight.weight(), &samples)?;
    let b = a * bil.c11 * rho;
    Ok((gronwall_certificate(&t, &y, mu, a, b, 0.5)?, bil))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    pub fields: usize,
    /// Relative invariant moments of Q before the projection.
    pub max_pre_defect: f64,
    pub max_post_defect: f64,
    /// min D(f) / Σ w |Q| |log f|.
    pub min_relative_d: f64,
    pub max_projection_correction: f64,
}

/// Positive, smooth random fields: mixtures of 1–3 Maxwellians with random
/// density, drift and temperature, well inside the box.
pub fn random_mixture(grid: &VelocityGrid, rng: &mut ChaCha8Rng) -> Result<DistributionField> {
    let k = rng.random_range(1..=3);
    let mut vals = vec![0.0; grid.len()];
    let spread = 0.12 * grid.extent;
    for _ in 0..k {
        let rho = rng.random_range(0.5..1.5);
        let u: Vec<f64> = (0..grid.dim).map(|_| rng.random_range(-spread..spread)).collect();
        let temp = rng.random_range(0.3..0.7);
        let c = maxwellian_with(grid, rho, &u, temp);
        vals.iter_mut().zip(&c.values).for_each(|(a, b)| *a += b);
    }
    DistributionField::plain(grid, vals)
}

pub fn conservation_check(op: &CollisionOperator, fields: usize, seed: u64) -> Result<ConservationReport> {
    let grid = &op.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = grid.weights();
    let mut rep = ConservationReport {
        fields,
        max_pre_defect: 0.0,
        max_post_defect: 0.0,
        min_relative_d: f64::INFINITY,
        max_projection_correction: 0.0,
    };
    for _ in 0..fields {
        let f = random_mixture(grid, &mut rng)?;
        let gain = op.q_plus_raw(&f.values, &f.values);
        let loss = op.q_minus_raw(&f.values, &f.values);
        let mut q: Vec<f64> = gain.iter().zip(&loss).map(|(a, b)| a - b).collect();
        let pre = relative_defects(grid, &q, &gain, &loss).into_iter().fold(0.0, f64::max);
        let corr = conservation_projection(grid, &mut q)?;
        let post = relative_defects(grid, &q, &gain, &loss).into_iter().fold(0.0, f64::max);
        let (d, _) = entropy_production_of(grid, &f.values, &q);
        let scale: f64 = (0..grid.len()).map(|i| w[i] * q[i].abs() * f.values[i].max(1e-300).ln().abs()).sum();
        rep.max_pre_defect = rep.max_pre_defect.max(pre);
        rep.max_post_defect = rep.max_post_defect.max(post);
        rep.max_projection_correction = rep.max_projection_correction.max(corr);
        if scale > 0.0 {
            rep.min_relative_d = rep.min_relative_d.min(d / scale);
        }
    }
    Ok(rep)
}

pub fn transfer(fx: &LinearFixture, eps_transfer: f64, eps_match: f64) -> Result<Vec<TransferReport>> {
    let mut weights = vec![fx.cfg.weight];
    weights.extend(fx.cfg.experiment.second_weight);
    weights
        .iter()
        .map(|w| {
            let lm = assemble_l_m(&fx.op, w.a, w.s)?.matrix();
            let eigs = general_eigenvalues(&lm)?;
            eigenvector_transfer_check(
                fx.grid(),
                &fx.spec,
                &lm,
                &eigs,
                Scaling::Stretched { a: w.a, s: w.s },
                eps_transfer,
                eps_match,
            )
        })
        .collect()
}

pub fn semigroup(fx: &LinearFixture) -> Result<SemigroupReport> {
    let lambda = fx.lambda();
    semigroup_decay(fx.grid(), &fx.sl, lambda, fx.scaling(), 5.0 / lambda, fx.cfg.experiment.semigroup_steps)
}

pub fn resolvent(fx: &LinearFixture) -> Result<ResolventReport> {
    let lambda = fx.lambda();
    let mu = fx.cfg.experiment.sector_mu_fraction * lambda;
    resolvent_scan(fx.grid(), &fx.sl, &fx.spec, fx.scaling(), mu, &sector_points(mu, lambda))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaStudy {
    pub rows: Vec<DeltaRow>,
    pub c3: f64,
    pub c1_decreasing: bool,
    pub c2_decreasing: bool,
    pub c4_increasing: bool,
}

/// δ ladder with the configured graded sphere rule; monotonicity is judged
/// with 10% noise allowance.
pub fn delta_study(cfg: &RunConfig) -> Result<DeltaStudy> {
    let base = cfg.operator()?;
    let rule = cfg.experiment.delta_sphere.clone().unwrap_or(cfg.sphere_rule());
    let sphere = SphereQuadrature::new(cfg.kernel.dimension, rule)?;
    let op = CollisionOperator::new(base.kernel.clone(), base.grid.clone(), sphere, base.interp, true)?;
    let mut deltas = cfg.experiment.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let (rows, c3) = delta_ladder(&op, Scaling::Stretched { a: cfg.weight.a, s: cfg.weight.s }, &deltas)?;
    let dec = |f: fn(&DeltaRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= 1.1 * f(&w[0]));
    let inc = |f: fn(&DeltaRow) -> f64| rows.windows(2).all(|w| f(&w[1]) >= 0.9 * f(&w[0]));
    Ok(DeltaStudy {
        c1_decreasing: dec(|r| r.c1),
        c2_decreasing: dec(|r| r.c2),
        c4_increasing: inc(|r| r.c4),
        rows,
        c3,
    })
}

pub fn povzner(cfg: &RunConfig, seed: u64) -> Result<PovznerReport> {
    let kernel = cfg.kernel_spec()?;
    let sphere = SphereQuadrature::new(cfg.kernel.dimension, cfg.sphere_rule())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    povzner_check(
        &kernel,
        &sphere,
        cfg.experiment.povzner_samples,
        cfg.moment_s(),
        &cfg.experiment.p_set,
        cfg.grid.extent,
        &mut rng,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauRow {
    pub eps: f64,
    pub t: Vec<f64>,
    pub exp_moment: Vec<f64>,
    pub plateau: f64,
    /// First record time after which every value stays within 2× of the plateau.
    pub tau: f64,
    pub moments_final: Vec<MomentRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauReport {
    pub a: f64,
    pub s: f64,
    pub q: f64,
    pub rows: Vec<PlateauRow>,
    /// max/min plateau over amplitudes.
    pub spread: f64,
    pub pass: bool,
}

/// Exponential moment ∫ f e^{a|v|^s} along trajectories from polynomial-tail
/// data. The plateau must be reached in the first half of the run, and the
/// plateaus for different amplitudes must agree within 2×.
pub fn exp_moment_plateau(fx: &LinearFixture, seed: u64) -> Result<PlateauReport> {
    let ex = &fx.cfg.experiment;
    let grid = fx.grid();
    let (a, s) = (fx.cfg.weight.a, fx.cfg.weight.s);
    let mut rows = Vec::new();
    for &eps in &ex.tail_eps {
        let (_, traj) = evolve(fx, InitialDatum::PolynomialTail { eps, q: ex.tail_q }, seed, false)?;
        let t = traj.times();
        let e = traj.column(|d| d.exp_moment);
        let plateau = *e.last().unwrap();
        let mut k = e.len();
        while k > 0 && e[k - 1] <= 2.0 * plateau && e[k - 1] >= 0.5 * plateau {
            k -= 1;
        }
        let tau = t[k.min(t.len() - 1)];
        let (_, last) = traj.snapshots.last().unwrap();
        let sm = fx.op.sqrt_maxwellian();
        let f = DistributionField::plain(grid, (0..grid.len()).map(|i| sm[i] * sm[i] + sm[i] * last[i]).collect())?;
        debug_assert!((exp_moment(grid, &f, a, s)? - plateau).abs() <= 1e-9 * plateau.abs());
        let moments_final = moment_table(grid, &f, fx.cfg.moment_s(), 20.0)?;
        rows.push(PlateauRow { eps, t, exp_moment: e, plateau, tau, moments_final });
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r.plateau), h.max(r.plateau)));
    let spread = hi / lo;
    let pass = spread <= 2.0 && rows.iter().all(|r| r.tau <= 0.5 * r.t.last().unwrap());
    Ok(PlateauReport { a, s, q: ex.tail_q, rows, spread, pass })
}
