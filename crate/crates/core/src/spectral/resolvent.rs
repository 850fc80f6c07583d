use super::{ModeClass, SymmetricSpectrum};
use crate::error::{Error, Result};
use crate::linearized::{Scaling, SymmetricL};
use crate::velocity_space::VelocityGrid;
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventRow {
    pub re: f64,
    pub im: f64,
    /// ‖𝓡(ξ)‖ in L¹(m) on 𝒮 (upper bound ‖𝓡Π‖).
    pub l1_norm: f64,
    /// ‖R(ξ)‖ in L²(M) on the complement of the invariants (LU + power iteration).
    pub l2_norm: f64,
    pub dist: f64,
}

/// Envelope y ≤ c0 + c1 x: c1 from least squares (clamped at 0), c0 the
/// smallest intercept covering every sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub c0: f64,
    pub c1: f64,
    pub violations: usize,
}

impl EnvelopeFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Self {
        let n = x.len() as f64;
        let (xm, ym) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
        let c1 = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
        let c0 = x.iter().zip(y).map(|(a, b)| b - c1 * a).fold(0.0, f64::max);
        let violations = x.iter().zip(y).filter(|(a, b)| **b > (c0 + c1 * **a) * (1.0 + 1e-12)).count();
        EnvelopeFit { c0, c1, violations }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventReport {
    pub mu: f64,
    pub rows: Vec<ResolventRow>,
    /// ‖𝓡‖ ≤ C₈ + C₉ ‖R‖.
    pub c8_c9: EnvelopeFit,
    /// ‖𝓡‖ ≤ a + b / |ξ + μ|.
    pub a_b: EnvelopeFit,
    /// max |‖R(ξ)‖ dist(ξ, Σ) − 1|.
    pub identity_error: f64,
    pub pass: bool,
}

/// Sample points ξ = −μ + r e^{iθ} with |θ| ≤ 3π/4 and Re ξ ≤ −μ/2.
pub fn sector_points(mu: f64, lambda: f64) -> Vec<c64> {
    let radii = [0.05, 0.1, 0.2, 0.35, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let mut out = Vec::new();
    for k in 0..9 {
        let th = -0.75 * PI + 1.5 * PI * k as f64 / 8.0;
        for r in radii {
            let r = r * lambda;
            let z = c64::new(-mu + r * th.cos(), r * th.sin());
            if z.re <= -mu / 2.0 {
                out.push(z);
            }
        }
    }
    out
}

/// Resolvent norms of the restricted, symmetrized operator: L²(M) directly
/// (complex LU), L¹ in the `scaling` weight through the eigen-expansion.
pub fn resolvent_scan(
    grid: &VelocityGrid,
    sl: &SymmetricL,
    spec: &SymmetricSpectrum,
    scaling: Scaling,
    mu: f64,
    points: &[c64],
) -> Result<ResolventReport> {
    let n = grid.len();
    let keep: Vec<usize> = (0..spec.values.len()).filter(|&k| spec.class[k] != ModeClass::Null).collect();
    let d = scaling.from_psi(grid);
    let c: Vec<f64> = grid.weights().iter().zip(&d).map(|(w, d)| d / w.sqrt()).collect();
    let w = grid.weights();
    // Columns of U scaled into g-coordinates on the left and right.
    let ul = Mat::<f64>::from_fn(n, keep.len(), |i, k| c[i] * spec.vectors[(i, keep[k])]);
    let ur = Mat::<f64>::from_fn(keep.len(), n, |k, j| spec.vectors[(j, keep[k])] / c[j]);
    let mut rows = Vec::with_capacity(points.len());
    for &xi in points {
        let dist = keep.iter().map(|&k| (c64::new(spec.values[k], 0.0) - xi).norm()).fold(f64::INFINITY, f64::min);
        if dist < 1e-12 {
            return Err(Error::numerical(format!("ξ = {xi} hits the spectrum")));
        }
        let inv: Vec<c64> = keep.iter().map(|&k| (c64::new(spec.values[k], 0.0) - xi).inv()).collect();
        let scaled_re = Mat::<f64>::from_fn(keep.len(), n, |k, j| inv[k].re * ur[(k, j)]);
        let scaled_im = Mat::<f64>::from_fn(keep.len(), n, |k, j| inv[k].im * ur[(k, j)]);
        let gr = &ul * &scaled_re;
        let gi = &ul * &scaled_im;
        let l1_norm = (0..n)
            .map(|j| (0..n).map(|i| w[i] * gr[(i, j)].hypot(gi[(i, j)])).sum::<f64>() / w[j])
            .fold(0.0, f64::max);
        let l2_norm = l2_resolvent_norm(&sl.projected, &sl.basis, xi)?;
        rows.push(ResolventRow { re: xi.re, im: xi.im, l1_norm, l2_norm, dist });
    }
    let big: Vec<f64> = rows.iter().map(|r| r.l1_norm).collect();
    let small: Vec<f64> = rows.iter().map(|r| r.l2_norm).collect();
    let inv_d: Vec<f64> = rows.iter().map(|r| 1.0 / c64::new(r.re + mu, r.im).norm()).collect();
    let c8_c9 = EnvelopeFit::fit(&small, &big);
    let a_b = EnvelopeFit::fit(&inv_d, &big);
    let identity_error = rows.iter().map(|r| (r.l2_norm * r.dist - 1.0).abs()).fold(0.0, f64::max);
    let pass = rows.len() >= 40 && c8_c9.violations == 0 && a_b.violations == 0 && identity_error <= 0.05;
    Ok(ResolventReport { mu, rows, c8_c9, a_b, identity_error, pass })
}

/// ‖P (K − ξ)⁻¹ P‖₂ by power iteration on R*R with one complex LU.
fn l2_resolvent_norm(k: &Mat<f64>, basis: &[Vec<f64>], xi: c64) -> Result<f64> {
    let n = k.nrows();
    let a = Mat::<c64>::from_fn(n, n, |i, j| c64::new(k[(i, j)], 0.0) - if i == j { xi } else { c64::new(0.0, 0.0) });
    let lu = a.partial_piv_lu();
    let project = |x: &mut Mat<c64>| {
        for b in basis {
            let dot: c64 = (0..n).map(|i| x[(i, 0)] * b[i]).sum();
            for i in 0..n {
                x[(i, 0)] -= dot * b[i];
            }
        }
    };
    let norm = |x: &Mat<c64>| (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
    let mut x = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(1.0 + ((i * 31) % 17) as f64 * 0.05, ((i * 7) % 5) as f64 * 0.1));
    project(&mut x);
    let mut est = 0.0;
    for _ in 0..200 {
        let nx = norm(&x);
        if nx == 0.0 {
            return Err(Error::numerical("resolvent power iteration collapsed"));
        }
        x = Mat::from_fn(n, 1, |i, _| x[(i, 0)] / nx);
        let mut y = lu.solve(&x);
        project(&mut y);
        let ny = norm(&y);
        // adjoint solve: (K − ξ̄)⁻¹ y = conj((K − ξ)⁻¹ conj y)
        let yc = Mat::<c64>::from_fn(n, 1, |i, _| y[(i, 0)].conj());
        let z = lu.solve(&yc);
        x = Mat::from_fn(n, 1, |i, _| z[(i, 0)].conj());
        project(&mut x);
        let done = (ny - est).abs() <= 1e-9 * ny;
        est = ny;
        if done {
            break;
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_points_stay_in_region() {
        let pts = sector_points(0.5, 1.0);
        assert!(pts.len() >= 40);
        for z in pts {
            let arg = c64::new(z.re + 0.5, z.im).arg();
            assert!(arg.abs() <= 0.75 * PI + 1e-12 && z.re <= -0.25 + 1e-12);
        }
    }

    #[test]
    fn envelope_covers_samples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.1, 2.9, 4.2, 4.8];
        let f = EnvelopeFit::fit(&x, &y);
        assert_eq!(f.violations, 0);
        assert!(f.c1 > 0.8 && f.c1 < 1.0);
    }
}
