//! Independent assembly of the mollified gain through the line/hyperplane
//! (Carleman-type) representation. Used only as a cross-check of the σ-path.
//!
//! 𝓛⁺_δ g(v) = I_δ(v) m⁻¹(v) ∫ (m g)(v + W) K(v, W) dW,
//! K(v, W) = |W|^{1−N} ∫_{W⊥} b̃ˢ_δ(|W|/|V|) Φ(|V|) M(v + V₂) dV₂,  |V|² = |W|² + |V₂|².
//! With |V₂| = |W| tan α the inner integral is over α ∈ (0, π/2) and the
//! directions of W⊥; b̃ˢ_δ(cos α) vanishes outside a compact α-interval.

use super::Scaling;
use crate::error::{Error, Result};
use crate::kernels::{CollisionKernelSpec, Mollifier, MollifierConfig};
use crate::quadrature::Rule;
use crate::velocity_space::{Frame, VelocityGrid};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CarlemanOptions {
    /// Gauss points per α-panel.
    pub alpha_order: usize,
    /// Trapezoid points on the circle of W⊥ (N = 3 only).
    pub n_beta: usize,
}

impl Default for CarlemanOptions {
    fn default() -> Self {
        CarlemanOptions { alpha_order: 16, n_beta: 24 }
    }
}

/// b̃ˢ(u) = 2^{N−1} u^{N−2} [b(1 − 2u²) + b(2u² − 1)], u ∈ [0, 1].
pub fn symmetrized_carleman_profile(dim: usize, b: impl Fn(f64) -> f64, u: f64) -> f64 {
    let z = 1.0 - 2.0 * u * u;
    2f64.powi(dim as i32 - 1) * u.powi(dim as i32 - 2) * (b(z) + b(-z))
}

/// Dense 𝓛⁺_δ in the given scaling (acting on g, f = M + ω g), diagonal set to 0
/// (K(v, 0) = 0 for γ > 0).
pub fn carleman_path_l_plus_delta(
    grid: &VelocityGrid,
    kernel: &CollisionKernelSpec,
    delta: f64,
    scaling: Scaling,
    opts: &CarlemanOptions,
) -> Result<Mat<f64>> {
    let dim = grid.dim;
    if dim != kernel.dimension {
        return Err(Error::GridMismatch(format!("grid dimension {} vs kernel dimension {}", dim, kernel.dimension)));
    }
    let moll = Mollifier::new(MollifierConfig::new(delta), dim)?;
    let e = delta * delta;
    // Support and transition layers of b_δ(±(1 − 2u²)) in u².
    let u2_breaks = [e / 2.0, 1.5 * e, 1.0 - 1.5 * e, 1.0 - e / 2.0];
    let mut alpha_breaks: Vec<f64> = u2_breaks.iter().rev().map(|u2: &f64| u2.sqrt().acos()).collect();
    alpha_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let rule = Rule::composite(opts.alpha_order, &alpha_breaks);
    let gamma = kernel.gamma;
    // coef(α) = w_α b̃ˢ_δ(cos α) cos^{−γ} α sec² α tan^{N−2} α.
    let mut tans = Vec::new();
    let mut coefs = Vec::new();
    for (&a, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (c, t) = (a.cos(), a.tan());
        let bt = symmetrized_carleman_profile(dim, |z| moll.b_delta(kernel, z), c);
        if bt == 0.0 {
            continue;
        }
        tans.push(t);
        coefs.push(w * bt * c.powf(-gamma) / (c * c) * t.powi(dim as i32 - 2));
    }
    // Unit directions of W⊥ in the frame (e₀[, e₁]) with their weights.
    let dirs: Vec<([f64; 2], f64)> = if dim == 2 {
        vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
    } else {
        let nb = opts.n_beta.max(4);
        (0..nb)
            .map(|k| {
                let b = 2.0 * PI * k as f64 / nb as f64;
                ([b.cos(), b.sin()], 2.0 * PI / nb as f64)
            })
            .collect()
    };

    let len = grid.len();
    let w = scaling.weight();
    let omega: Vec<f64> = grid.speeds2().iter().map(|&v2| w.eval_sq(v2)).collect();
    let ind: Vec<f64> = grid.speeds2().iter().map(|v2| moll.indicator(v2.sqrt())).collect();
    let mut a = Mat::<f64>::zeros(len, len);
    let mut wv = [0.0; 3];
    let mut e_perp = [[0.0; 3]; 2];
    let mut tmp = [0.0; 3];
    for i in 0..len {
        if ind[i] == 0.0 {
            continue;
        }
        let v = grid.node(i);
        let v2 = grid.speed2(i);
        for j in 0..len {
            if j == i {
                continue;
            }
            let vj = grid.node(j);
            let mut wn2 = 0.0;
            for d in 0..dim {
                wv[d] = vj[d] - v[d];
                wn2 += wv[d] * wv[d];
            }
            let wn = wn2.sqrt();
            let k_hat: Vec<f64> = wv[..dim].iter().map(|x| x / wn).collect();
            let frame = Frame::new(&k_hat);
            for (a_idx, ep) in e_perp.iter_mut().enumerate().take(dim - 1) {
                let mut s = [0.0; 3];
                s[a_idx] = 1.0;
                frame.apply(&s[..dim], &mut tmp[..dim]);
                ep[..dim].copy_from_slice(&tmp[..dim]);
            }
            let mut k = 0.0;
            for &(c, wd) in &dirs {
                // v · e for e = c₀ e₀ + c₁ e₁
                let mut ve = 0.0;
                for d in 0..dim {
                    let ed = c[0] * e_perp[0][d] + if dim == 3 { c[1] * e_perp[1][d] } else { 0.0 };
                    ve += v[d] * ed;
                }
                let mut s = 0.0;
                for (t, cf) in tans.iter().zip(&coefs) {
                    let rho = wn * t;
                    s += cf * (-v2 - 2.0 * rho * ve - rho * rho).exp();
                }
                k += wd * s;
            }
            k *= kernel.c_phi * wn.powf(gamma);
            a[(i, j)] = ind[i] / omega[i] * grid.weight(j) * omega[j] * k;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::sphere_area;

    #[test]
    fn profile_preserves_angular_mass() {
        // |S^{N−2}| ∫₀^{π/2} b̃ˢ(cos α) sin^{N−2} α dα counts both gain terms: 2 ℓ_b.
        for dim in [2usize, 3] {
            let b = |z: f64| 1.0 + 0.5 * z + 0.25 * z * z;
            let p = dim as i32 - 2;
            let lb = Rule::gauss_on(64, 0.0, PI).integrate(|t| b(t.cos()) * t.sin().powi(p)) * sphere_area(dim - 1);
            let folded = Rule::gauss_on(64, 0.0, PI / 2.0)
                .integrate(|a| symmetrized_carleman_profile(dim, b, a.cos()) * a.sin().powi(p))
                * sphere_area(dim - 1);
            assert!((folded - 2.0 * lb).abs() < 1e-10 * lb, "dim {dim}: {folded} vs {lb}");
        }
    }
}
