use super::SymmetricSpectrum;
use crate::error::{Error, Result};
use crate::fit::{fit_decay_rate, DecayFit};
use crate::velocity_space::VelocityGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileReport {
    pub t: Vec<f64>,
    /// ‖φ₁(t)‖₁ with φ₁ = √M Π₁ψ (the gap-eigenspace component of f − M).
    pub phi1_l1: Vec<f64>,
    /// ‖R(t)‖₁, R = √M (ψ − Π₁ψ).
    pub remainder_l1: Vec<f64>,
    /// ‖φ₁(t)‖ in L²(M⁻¹).
    pub phi1_l2_inv_m: Vec<f64>,
    pub gap_cluster: usize,
    pub phi1_fit: DecayFit,
    pub remainder_fit: DecayFit,
    pub lambda: f64,
    pub pass: bool,
}

/// Splits a series of perturbations ψ_t = (f_t − M)/√M into the gap-eigenspace
/// component and the remainder, and fits both decay rates over `window`.
pub fn asymptotic_profile(
    grid: &VelocityGrid,
    spec: &SymmetricSpectrum,
    series: &[(f64, Vec<f64>)],
    window: (f64, f64),
    cluster_tol: f64,
) -> Result<ProfileReport> {
    let cluster = spec.gap_cluster(cluster_tol);
    if cluster.is_empty() {
        return Err(Error::numerical("empty gap cluster"));
    }
    let n = grid.len();
    let w = grid.weights();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let sm: Vec<f64> = grid.speeds2().iter().map(|v2| (-0.5 * v2).exp()).collect();
    let mut rep = ProfileReport {
        t: Vec::new(),
        phi1_l1: Vec::new(),
        remainder_l1: Vec::new(),
        phi1_l2_inv_m: Vec::new(),
        gap_cluster: cluster.len(),
        phi1_fit: DecayFit { mu: 0.0, c: 0.0, residual: 0.0, points: 0 },
        remainder_fit: DecayFit { mu: 0.0, c: 0.0, residual: 0.0, points: 0 },
        lambda: spec.gap(),
        pass: false,
    };
    for (t, psi) in series {
        let chi: Vec<f64> = (0..n).map(|i| sw[i] * psi[i]).collect();
        let mut p1 = vec![0.0; n];
        for &k in &cluster {
            let c: f64 = (0..n).map(|i| spec.vectors[(i, k)] * chi[i]).sum();
            for i in 0..n {
                p1[i] += c * spec.vectors[(i, k)];
            }
        }
        let (mut a, mut b, mut l2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let psi1 = p1[i] / sw[i];
            a += w[i] * sm[i] * psi1.abs();
            b += w[i] * sm[i] * (psi[i] - psi1).abs();
            l2 += w[i] * psi1 * psi1;
        }
        rep.t.push(*t);
        rep.phi1_l1.push(a);
        rep.remainder_l1.push(b);
        rep.phi1_l2_inv_m.push(l2.sqrt());
    }
    rep.phi1_fit = fit_decay_rate(&rep.t, &rep.phi1_l1, window)?;
    rep.remainder_fit = fit_decay_rate(&rep.t, &rep.remainder_l1, window)?;
    rep.pass = rep.remainder_fit.mu > rep.phi1_fit.mu && (rep.phi1_fit.mu / rep.lambda - 1.0).abs() <= 0.1;
    Ok(rep)
}
