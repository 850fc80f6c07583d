use super::expm;
use crate::error::{Error, Result};
use crate::fit::{fit_decay_rate, DecayFit};
use crate::linearized::{Scaling, SymmetricL};
use crate::velocity_space::VelocityGrid;
use faer::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupRow {
    pub t: f64,
    /// ‖e^{t𝓛̃} Π‖ in the L¹ operator norm (upper bound for the restricted norm).
    pub upper: f64,
    /// max_j ‖e^{t𝓛̃} Π e_j‖₁ / ‖Π e_j‖₁ (lower bound).
    pub lower: f64,
    /// ‖e^{tL̃}‖ on the restricted space in L²(M).
    pub l2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub scaling: Scaling,
    pub lambda: f64,
    pub rows: Vec<SemigroupRow>,
    pub fit: DecayFit,
    pub mu: f64,
    pub c10: f64,
    pub violations: usize,
    /// max_t |‖e^{tL̃}‖_{L²(M)} e^{λt} − 1|.
    pub l2_identity_error: f64,
    pub pass: bool,
}

/// Decay of the semigroup on the discrete complement 𝒮 of the invariants,
/// for t on the uniform ladder k·t_max/steps. The weight of the L¹ norm is
/// the one of `scaling` (g with f = M + ω g).
pub fn semigroup_decay(
    grid: &VelocityGrid,
    sl: &SymmetricL,
    lambda: f64,
    scaling: Scaling,
    t_max: f64,
    steps: usize,
) -> Result<SemigroupReport> {
    if !(lambda > 0.0) || steps < 4 || !(t_max > 0.0) {
        return Err(Error::domain("semigroup: need λ > 0, t_max > 0 and ≥ 4 steps"));
    }
    let n = grid.len();
    let dt = t_max / steps as f64;
    let step = expm(&Mat::<f64>::from_fn(n, n, |i, j| dt * sl.projected[(i, j)]))?;
    // Π in χ-coordinates.
    let mut cur = Mat::<f64>::identity(n, n);
    for b in &sl.basis {
        for j in 0..n {
            for i in 0..n {
                cur[(i, j)] -= b[i] * b[j];
            }
        }
    }
    let proj_cols: Vec<f64> = {
        let g = to_g(grid, &cur, scaling);
        col_l1(grid, &g)
    };
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let g = to_g(grid, &cur, scaling);
        let cols = col_l1(grid, &g);
        let w = grid.weights();
        let upper = (0..n).map(|j| cols[j] / w[j]).fold(0.0, f64::max);
        let lower = (0..n).filter(|&j| proj_cols[j] > 0.0).map(|j| cols[j] / proj_cols[j]).fold(0.0, f64::max);
        let l2 = sym_norm2(&cur);
        rows.push(SemigroupRow { t, upper, lower, l2 });
        if k < steps {
            cur = &step * &cur;
        }
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.upper).collect();
    let fit = fit_decay_rate(&ts, &ys, (0.5 * t_max, t_max))?;
    let mu = fit.mu;
    let c10 = rows.iter().map(|r| r.upper * (mu * r.t).exp()).fold(0.0, f64::max);
    let violations = rows.iter().filter(|r| r.upper > c10 * (-mu * r.t).exp() * (1.0 + 1e-12)).count();
    let l2_identity_error = rows.iter().map(|r| (r.l2 * (lambda * r.t).exp() - 1.0).abs()).fold(0.0, f64::max);
    let pass = violations == 0 && mu >= 0.9 * lambda;
    Ok(SemigroupReport { scaling, lambda, rows, fit, mu, c10, violations, l2_identity_error, pass })
}

/// χ-coordinates → g-coordinates: G = diag(d/√w) E diag(√w/d).
fn to_g(grid: &VelocityGrid, e: &Mat<f64>, scaling: Scaling) -> Mat<f64> {
    let d = scaling.from_psi(grid);
    let c: Vec<f64> = grid.weights().iter().zip(&d).map(|(w, d)| d / w.sqrt()).collect();
    Mat::from_fn(e.nrows(), e.ncols(), |i, j| c[i] * e[(i, j)] / c[j])
}

/// Σ_i w_i |A_ij| for every column.
fn col_l1(grid: &VelocityGrid, a: &Mat<f64>) -> Vec<f64> {
    let w = grid.weights();
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| w[i] * a[(i, j)].abs()).sum()).collect()
}

/// 2-norm of a symmetric matrix by power iteration.
fn sym_norm2(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + ((i * 7919) % 13) as f64 * 0.1);
    let mut est = 0.0;
    for _ in 0..60 {
        let nx = x.norm_l2();
        if nx == 0.0 {
            return 0.0;
        }
        x = Mat::from_fn(n, 1, |i, _| x[(i, 0)] / nx);
        x = a * &x;
        let ny = x.norm_l2();
        let done = (ny - est).abs() <= 1e-10 * ny;
        est = ny;
        if done {
            break;
        }
    }
    est
}
