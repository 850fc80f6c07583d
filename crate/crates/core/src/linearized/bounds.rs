//! Measured counterparts of the explicit constants: Grad-type kernel bound,
//! δ-approximation constants and the Prop.-2.4-style operator bounds.

use super::{assemble_gain, assemble_l_plus_delta_psi, conjugate, l1_operator_norm, spectral_norm, to_chi, Scaling};
use crate::collision::CollisionOperator;
use crate::error::Result;
use crate::kernels::{Mollifier, MollifierConfig};
use crate::velocity_space::VelocityGrid;
use faer::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradKernelReport {
    /// Constant fitted on bulk pairs (|u|, |v| ≤ R/2).
    pub fitted_c: f64,
    /// Largest ratio k / k_bound over all off-diagonal pairs.
    pub max_ratio_all: f64,
    pub pairs_checked: usize,
    /// Pairs anywhere in the box exceeding the bulk-fitted bound.
    pub violations: usize,
    /// Violations among pairs with |u|, |v| ≤ 0.8 R (away from the box boundary).
    pub interior_violations: usize,
    /// max_u Σ_v w_v |k(u, v)|.
    pub young_row_sum: f64,
}

/// |z|^{1+γ−N} exp[−|z|²/4 − (|u|²−|v|²)²/(4|z|²)], z = u − v.
pub fn grad_bound_shape(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let dim = u.len() as f64;
    let z2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    let u2: f64 = u.iter().map(|x| x * x).sum();
    let v2: f64 = v.iter().map(|x| x * x).sum();
    let e = u2 - v2;
    z2.sqrt().powf(1.0 + gamma - dim) * (-z2 / 4.0 - e * e / (4.0 * z2)).exp()
}

/// Checks the gain kernel in the L²(M)-symmetric convention,
/// k(v_i, v_j) = S⁺_ij / w_j (ψ-coordinates), against the Grad-type shape.
pub fn grad_kernel_bound_check(grid: &VelocityGrid, gamma: f64, plus_psi: &Mat<f64>) -> GradKernelReport {
    let n = grid.len();
    let r = grid.extent;
    let mut fitted: f64 = 0.0;
    let mut all: f64 = 0.0;
    let mut young: f64 = 0.0;
    let mut pairs = 0;
    let bulk = |i: usize| grid.speed2(i) <= 0.25 * r * r;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let k = plus_psi[(i, j)] / grid.weight(j);
            row += grid.weight(j) * k.abs();
            if i == j {
                continue;
            }
            pairs += 1;
            let ratio = k.abs() / grad_bound_shape(grid.node(i), grid.node(j), gamma);
            all = all.max(ratio);
            if bulk(i) && bulk(j) {
                fitted = fitted.max(ratio);
            }
        }
        young = young.max(row);
    }
    let interior = |i: usize| grid.box_fraction(i) <= 0.8;
    let (mut violations, mut interior_violations) = (0, 0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let k = plus_psi[(i, j)].abs() / grid.weight(j);
            if k > fitted * grad_bound_shape(grid.node(i), grid.node(j), gamma) * (1.0 + 1e-9) {
                violations += 1;
                if interior(i) && interior(j) {
                    interior_violations += 1;
                }
            }
        }
    }
    GradKernelReport { fitted_c: fitted, max_ratio_all: all, pairs_checked: pairs, violations, interior_violations, young_row_sum: young }
}

/// Central-difference gradient along each axis (one-sided at the faces),
/// applied to every column of `a`; returns Σ_d |∂_d A| entrywise.
fn gradient_abs(a: &Mat<f64>, grid: &VelocityGrid) -> Mat<f64> {
    let (n, dim, h) = (grid.n, grid.dim, grid.h);
    let len = grid.len();
    let mut out = Mat::<f64>::zeros(len, a.ncols());
    let mut stride = 1;
    for _ in 0..dim {
        for i in 0..len {
            let k = (i / stride) % n;
            let (lo, hi, den) = if k == 0 {
                (i, i + stride, h)
            } else if k == n - 1 {
                (i - stride, i, h)
            } else {
                (i - stride, i + stride, 2.0 * h)
            };
            for j in 0..a.ncols() {
                out[(i, j)] += ((a[(hi, j)] - a[(lo, j)]) / den).abs();
            }
        }
        stride *= n;
    }
    out
}

/// Discrete L¹ → W^{1,1} operator norm, with ‖u‖_{W^{1,1}} = ‖u‖₁ + Σ_d ‖∂_d u‖₁.
pub fn w11_operator_norm(a: &Mat<f64>, grid: &VelocityGrid) -> f64 {
    let g = gradient_abs(a, grid);
    let w = grid.weights();
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| w[i] * (a[(i, j)].abs() + g[(i, j)])).sum::<f64>() / w[j])
        .fold(0.0, f64::max)
}

/// sup_{i,j} |A_ij| / (w_j e_i): the best C in |(A g)_i| ≤ C ‖g‖₁ e_i.
pub fn pointwise_envelope_constant(a: &Mat<f64>, grid: &VelocityGrid, envelope: &[f64]) -> f64 {
    let mut c: f64 = 0.0;
    for i in 0..a.nrows() {
        if envelope[i] <= 0.0 {
            continue;
        }
        for j in 0..a.ncols() {
            c = c.max(a[(i, j)].abs() / (grid.weight(j) * envelope[i]));
        }
    }
    c
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    /// ‖𝓛⁺ − 𝓛⁺_δ‖_{L¹(⟨v⟩^γ) → L¹}.
    pub c1: f64,
    /// ‖L⁺ − L⁺_δ‖_{L²(M)}.
    pub c2: f64,
    /// Best C₄ in |𝓛⁺_δ g| ≤ C₄ I_δ ‖g‖₁.
    pub c4: f64,
    /// ‖𝓛⁺_δ‖_{L¹ → W^{1,1}} (discrete-gradient surrogate).
    pub c5: f64,
}

/// δ-approximation study. All gains are assembled with the sphere rule of
/// `op` (use a graded rule so that the angular windows are resolved).
pub fn delta_ladder(op: &CollisionOperator, weight: Scaling, deltas: &[f64]) -> Result<(Vec<DeltaRow>, f64)> {
    let grid = &op.grid;
    let gamma = op.kernel.gamma;
    let full = assemble_gain(op, None);
    let d_m = weight.from_psi(grid);
    let bracket: Vec<f64> = grid.speeds2().iter().map(|v2| (1.0 + v2).powf(0.5 * gamma)).collect();
    let c3 = l1_operator_norm(&conjugate(&full, &d_m), grid, Some(&bracket));
    let mut rows = Vec::new();
    for &delta in deltas {
        let moll = Mollifier::new(MollifierConfig::new(delta), grid.dim)?;
        let approx = assemble_l_plus_delta_psi(op, delta)?;
        let diff = &full - &approx;
        let c1 = l1_operator_norm(&conjugate(&diff, &d_m), grid, Some(&bracket));
        let c2 = spectral_norm(&to_chi(grid, &diff))?;
        let approx_m = conjugate(&approx, &d_m);
        let ind: Vec<f64> = grid.speeds2().iter().map(|v2| moll.indicator(v2.sqrt())).collect();
        let c4 = pointwise_envelope_constant(&approx_m, grid, &ind);
        let c5 = w11_operator_norm(&approx_m, grid);
        rows.push(DeltaRow { delta, c1, c2, c4, c5 });
    }
    Ok((rows, c3))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarBounds {
    /// Best C₆ in |𝓛* g| ≤ C₆ ‖g‖₁ m⁻¹⟨v⟩^γ M.
    pub c6: f64,
    /// ‖𝓛*‖_{L¹ → W^{1,1}} (discrete-gradient surrogate).
    pub c7: f64,
    /// Violations of the C₆ envelope on the supplied random samples.
    pub envelope_violations: usize,
    pub samples: usize,
}

pub fn star_bounds(grid: &VelocityGrid, star_m: &Mat<f64>, scaling: Scaling, gamma: f64, samples: &[Vec<f64>]) -> StarBounds {
    let w = scaling.weight();
    let env: Vec<f64> =
        grid.speeds2().iter().map(|&v2| (-v2).exp() * (1.0 + v2).powf(0.5 * gamma) / w.eval_sq(v2)).collect();
    let c6 = pointwise_envelope_constant(star_m, grid, &env);
    let c7 = w11_operator_norm(star_m, grid);
    let mut violations = 0;
    for g in samples {
        let norm = crate::velocity_space::l1(grid, g);
        for i in 0..grid.len() {
            let v: f64 = (0..grid.len()).map(|j| star_m[(i, j)] * g[j]).sum();
            if v.abs() > c6 * norm * env[i] * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    StarBounds { c6, c7, envelope_violations: violations, samples: samples.len() }
}
