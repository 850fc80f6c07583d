use crate::error::{Error, Result};
use crate::velocity_space::{invariant, n_invariants, DistributionField, VelocityGrid};
use crate::linalg::solve_small;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Removes the invariant moments of a perturbation p by
/// p ← p − M e^{−κ|v|²} Σ c_a φ_a.
fn neutralize(grid: &VelocityGrid, p: &mut [f64], kappa: f64) -> Result<()> {
    let k = n_invariants(grid);
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..grid.len() {
        let wm = grid.weight(i) * (-(1.0 + kappa) * grid.speed2(i)).exp();
        for a in 0..k {
            let pa = invariant(grid, a, i);
            rhs[a] += grid.weight(i) * p[i] * pa;
            for b in 0..k {
                gram[a * k + b] += wm * pa * invariant(grid, b, i);
            }
        }
    }
    let c = solve_small(gram, rhs).ok_or_else(|| Error::numerical("singular invariant Gram matrix"))?;
    for (i, v) in p.iter_mut().enumerate() {
        let m = (-(1.0 + kappa) * grid.speed2(i)).exp();
        *v -= m * (0..k).map(|a| c[a] * invariant(grid, a, i)).sum::<f64>();
    }
    Ok(())
}

/// f0 = M (1 + ε χ) with χ a random combination of Hermite functions
/// x^α e^{−|v|²/4} (|α| ≤ 4, unit RMS under M), moment-neutral. Fails if the
/// datum is not positive.
pub fn hermite_perturbation(grid: &VelocityGrid, eps: f64, rng: &mut ChaCha8Rng) -> Result<DistributionField> {
    let dim = grid.dim;
    let mut exps: Vec<[usize; 3]> = Vec::new();
    for a in 0..=4usize {
        for b in 0..=(4 - a) {
            for c in 0..=(if dim == 3 { 4 - a - b } else { 0 }) {
                exps.push([a, b, c]);
            }
        }
    }
    let coef: Vec<f64> = exps.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = grid.len();
    let mut chi: Vec<f64> = (0..n)
        .map(|i| {
            let v = grid.node(i);
            let p: f64 = exps
                .iter()
                .zip(&coef)
                .map(|(e, c)| c * (0..dim).map(|d| v[d].powi(e[d] as i32)).product::<f64>())
                .sum();
            p * (-0.25 * grid.speed2(i)).exp()
        })
        .collect();
    let rms = ((0..n).map(|i| grid.weight(i) * (-grid.speed2(i)).exp() * chi[i] * chi[i]).sum::<f64>()
        / (0..n).map(|i| grid.weight(i) * (-grid.speed2(i)).exp()).sum::<f64>())
    .sqrt();
    chi.iter_mut().for_each(|x| *x /= rms);
    let mut p: Vec<f64> = (0..n).map(|i| eps * (-grid.speed2(i)).exp() * chi[i]).collect();
    neutralize(grid, &mut p, 0.25)?;
    let f: Vec<f64> = (0..n).map(|i| (-grid.speed2(i)).exp() + p[i]).collect();
    if f.iter().any(|v| *v < 0.0) {
        return Err(Error::domain(format!("ε = {eps} perturbation is not positive")));
    }
    DistributionField::plain(grid, f)
}

/// f0 = M + ε c ⟨v⟩^{−q} (moment-neutral), a slowly decaying perturbation
/// with unit L¹ mass before neutralization.
pub fn polynomial_tail_perturbation(grid: &VelocityGrid, eps: f64, q: f64) -> Result<DistributionField> {
    let n = grid.len();
    let raw: Vec<f64> = grid.speeds2().iter().map(|v2| (1.0 + v2).powf(-0.5 * q)).collect();
    let mass: f64 = (0..n).map(|i| grid.weight(i) * raw[i]).sum();
    let mut p: Vec<f64> = raw.iter().map(|r| eps * r / mass).collect();
    neutralize(grid, &mut p, 0.0)?;
    let f: Vec<f64> = (0..n).map(|i| (-grid.speed2(i)).exp() + p[i]).collect();
    if f.iter().any(|v| *v < 0.0) {
        return Err(Error::domain(format!("tail perturbation ε = {eps} is not positive")));
    }
    DistributionField::plain(grid, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity_space::{invariant_moments, maxwellian_field};
    use rand::SeedableRng;

    #[test]
    fn perturbations_are_neutral_and_positive() {
        let g = VelocityGrid::new(2, 21, 5.0).unwrap();
        let m = invariant_moments(&g, &maxwellian_field(&g).values);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in [hermite_perturbation(&g, 0.05, &mut rng).unwrap(), polynomial_tail_perturbation(&g, 0.05, 6.0).unwrap()] {
            assert!(f.values.iter().all(|v| *v >= 0.0));
            let mf = invariant_moments(&g, &f.values);
            for (a, b) in m.iter().zip(&mf) {
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}
