use crate::collision::CollisionOperator;
use crate::error::{Error, Result};
use crate::velocity_space::{invariant, n_invariants, WeightFunction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GronwallReport {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub y0: f64,
    /// max_t y(t) e^{μt} / y(0).
    pub c12_fitted: f64,
    /// Constant from the Bernoulli majorant; None when a·y(0) is too large
    /// for the closure.
    pub c12_majorant: Option<f64>,
    /// max_t [y(t) − RHS(t)] / y(0) for the convolution inequality.
    pub duhamel_excess: f64,
    pub majorant_violations: usize,
    pub pass: bool,
}

/// Certifies y(t) ≤ C₁₂ y(0) e^{−μt} from y(t) ≤ a e^{−μt} y(0) + b∫₀ᵗ e^{−μ(t−s)} y(s)^{1+θ} ds.
///
/// With u = y e^{μt} the comparison ODE u' = b e^{−μθt} u^{1+θ}, u(0) = a y(0)
/// integrates to u^{−θ}(t) = (a y₀)^{−θ} − (b/μ)(1 − e^{−μθt}), bounded for all
/// t iff (a y₀)^{−θ} > b/μ.
pub fn gronwall_certificate(t: &[f64], y: &[f64], mu: f64, a: f64, b: f64, theta: f64) -> Result<GronwallReport> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::domain("gronwall certificate needs matching series of length ≥ 2"));
    }
    if y.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("series must be positive"));
    }
    if !(mu > 0.0 && a > 0.0 && b >= 0.0 && theta > 0.0) {
        return Err(Error::domain("need μ, a, θ > 0 and b ≥ 0"));
    }
    let y0 = y[0];
    let t0 = t[0];
    let c12_fitted = t.iter().zip(y).map(|(&s, &v)| v * (mu * (s - t0)).exp() / y0).fold(0.0, f64::max);
    let z0 = (a * y0).powf(-theta);
    let c12_majorant = (z0 > b / mu).then(|| (z0 - b / mu).powf(-1.0 / theta) / y0);

    // Convolution by the trapezoid rule, advanced recursively:
    // I(t_{k+1}) = e^{−μΔ} I(t_k) + Δ/2 (e^{−μΔ} y_k^{1+θ} + y_{k+1}^{1+θ}).
    let mut conv = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for k in 0..t.len() {
        if k > 0 {
            let dt = t[k] - t[k - 1];
            let decay = (-mu * dt).exp();
            conv = decay * conv + 0.5 * dt * (decay * y[k - 1].powf(1.0 + theta) + y[k].powf(1.0 + theta));
        }
        let rhs = a * (-mu * (t[k] - t0)).exp() * y0 + b * conv;
        excess = excess.max((y[k] - rhs) / y0);
    }
    let majorant_violations = match c12_majorant {
        Some(c) => t.iter().zip(y).filter(|(&s, &v)| v > c * y0 * (-mu * (s - t0)).exp() * (1.0 + 1e-12)).count(),
        None => t.len(),
    };
    let pass = c12_majorant.is_some() && excess <= 1e-12 && majorant_violations == 0;
    Ok(GronwallReport { mu, a, b, theta, y0, c12_fitted, c12_majorant, duhamel_excess: excess, majorant_violations, pass })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BilinearReport {
    /// max over samples of ‖Γ(g,g)‖₁ / (‖g‖₁^{3/2} ‖g‖_{L¹(m⁻¹)}^{1/2}).
    pub c11: f64,
    pub ratios: Vec<f64>,
    pub skipped_zero: usize,
    /// max over samples and invariants of |Σ w m Γ φ| / Σ w m |Γ| |φ|.
    pub invariant_defect: f64,
}

/// Γ(g,g) = m⁻¹ Q(mg, mg) on the given samples (node values of g).
pub fn bilinear_gamma_constant(op: &CollisionOperator, weight: &WeightFunction, samples: &[Vec<f64>]) -> Result<BilinearReport> {
    let grid = &op.grid;
    let n = grid.len();
    let m = weight.on_grid(grid);
    let w = grid.weights();
    let mut ratios = Vec::new();
    let mut skipped = 0;
    let mut defect: f64 = 0.0;
    for g in samples {
        if g.len() != n {
            return Err(Error::GridMismatch(format!("sample has {} values, grid has {n}", g.len())));
        }
        let n1: f64 = (0..n).map(|i| w[i] * g[i].abs()).sum();
        let nm: f64 = (0..n).map(|i| w[i] * g[i].abs() / m[i]).sum();
        if n1 == 0.0 {
            skipped += 1;
            continue;
        }
        let f: Vec<f64> = (0..n).map(|i| m[i] * g[i]).collect();
        let gain = op.q_plus_raw(&f, &f);
        let loss = op.q_minus_raw(&f, &f);
        let q: Vec<f64> = (0..n).map(|i| gain[i] - loss[i]).collect();
        let gamma_l1: f64 = (0..n).map(|i| w[i] * q[i].abs() / m[i]).sum();
        ratios.push(gamma_l1 / (n1.powf(1.5) * nm.sqrt()));
        for a in 0..n_invariants(grid) {
            let (mut s, mut scale) = (0.0, 0.0);
            for i in 0..n {
                let phi = invariant(grid, a, i);
                s += w[i] * q[i] * phi;
                scale += w[i] * q[i].abs() * phi.abs();
            }
            if scale > 0.0 {
                defect = defect.max(s.abs() / scale);
            }
        }
    }
    if ratios.is_empty() {
        return Err(Error::domain("all bilinear samples have zero norm"));
    }
    let c11 = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(BilinearReport { c11, ratios, skipped_zero: skipped, invariant_defect: defect })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_exponential_has_unit_constant() {
        let t: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| 0.01 * (-0.7 * s).exp()).collect();
        let r = gronwall_certificate(&t, &y, 0.7, 1.0, 0.0, 0.5).unwrap();
        assert!((r.c12_fitted - 1.0).abs() < 1e-12);
        assert!((r.c12_majorant.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn majorant_ode_saturates_certificate() {
        // Integrate u' = b e^{−μθt} u^{1+θ} with RK4 and compare with the closed form.
        let (mu, a, b, theta, y0) = (1.0, 2.0, 0.5, 0.5, 0.05);
        let rhs = |t: f64, u: f64| b * (-mu * theta * t).exp() * u.powf(1.0 + theta);
        let h = 1e-3;
        let mut u = a * y0;
        let mut ts = vec![0.0];
        let mut ys = vec![y0];
        for k in 0..20000 {
            let t = k as f64 * h;
            let k1 = rhs(t, u);
            let k2 = rhs(t + h / 2.0, u + h / 2.0 * k1);
            let k3 = rhs(t + h / 2.0, u + h / 2.0 * k2);
            let k4 = rhs(t + h, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (k + 1) % 100 == 0 {
                ts.push(t + h);
                ys.push(0.999 * u * (-mu * (t + h)).exp());
            }
        }
        let r = gronwall_certificate(&ts, &ys, mu, a, b, theta).unwrap();
        let c = r.c12_majorant.unwrap();
        let limit = u / y0;
        assert!((c - limit).abs() < 1e-3 * c, "{c} {limit}");
        assert!(r.majorant_violations == 0);
    }

    #[test]
    fn large_data_is_not_certified() {
        let t = vec![0.0, 1.0];
        let y = vec![10.0, 5.0];
        let r = gronwall_certificate(&t, &y, 0.1, 1.0, 1.0, 0.5).unwrap();
        assert!(r.c12_majorant.is_none());
        assert!(!r.pass);
    }
}
