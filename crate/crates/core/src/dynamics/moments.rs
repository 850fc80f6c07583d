use crate::error::{Error, Result};
use crate::kernels::CollisionKernelSpec;
use crate::velocity_space::{DistributionField, Frame, SphereQuadrature, VelocityGrid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: f64,
    pub m_p: f64,
    pub z_p: f64,
    /// Fraction of ∫|v|^{sp} M lying outside the inscribed ball |v| ≤ R.
    pub tail_weight: f64,
    /// tail_weight ≤ 1%.
    pub trusted: bool,
}

/// m_p = Σ w f |v|^{sp} and z_p = m_p / Γ(p + 1/2) for p = 0, ½, …, p_max.
pub fn moment_table(grid: &VelocityGrid, f: &DistributionField, s: f64, p_max: f64) -> Result<Vec<MomentRow>> {
    f.check_grid(grid)?;
    if !(s > 0.0) || !(p_max >= 0.0) {
        return Err(Error::domain("moment table needs s > 0 and p_max ≥ 0"));
    }
    let r2 = grid.extent * grid.extent;
    let dim = grid.dim as f64;
    let mut rows = Vec::new();
    let mut k = 0;
    loop {
        let p = 0.5 * k as f64;
        if p > p_max + 1e-12 {
            break;
        }
        let sp = s * p;
        let m_p: f64 = (0..grid.len()).map(|i| grid.weight(i) * f.values[i] * grid.speed2(i).powf(0.5 * sp)).sum();
        let z_p = m_p / ln_gamma(p + 0.5).exp();
        let tail_weight = gamma_ur(0.5 * (sp + dim), r2);
        rows.push(MomentRow { p, m_p, z_p, tail_weight, trusted: tail_weight <= 0.01 });
        k += 1;
    }
    Ok(rows)
}

/// Σ w f e^{a|v|^s}.
pub fn exp_moment(grid: &VelocityGrid, f: &DistributionField, a: f64, s: f64) -> Result<f64> {
    f.check_grid(grid)?;
    Ok((0..grid.len()).map(|i| grid.weight(i) * f.values[i] * (a * grid.speed2(i).powf(0.5 * s)).exp()).sum())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovznerRow {
    pub p: f64,
    pub sp: f64,
    /// sup over samples of (K_p + |v|^{sp} + |v_*|^{sp}) / (|v|² + |v_*|²)^{sp/2}.
    pub alpha_hat: f64,
    pub events_ge_one: usize,
    /// α̂_p (sp/2 + 1).
    pub shape_constant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovznerReport {
    pub s: f64,
    pub samples: usize,
    pub rows: Vec<PovznerRow>,
    pub nonincreasing: bool,
    pub all_below_one: bool,
    /// max |K_p| / (|v|² + |v_*|²) at sp = 2.
    pub k_energy_max: f64,
}

/// K_p(v, v_*) = ½ Σ_k w_k b_k (|v′|^{sp} + |v′_*|^{sp} − |v|^{sp} − |v_*|^{sp}).
fn k_p(kernel: &CollisionKernelSpec, sphere: &SphereQuadrature, v: &[f64], vs: &[f64], sp: f64) -> f64 {
    let dim = v.len();
    let mut k = [0.0; 3];
    let mut mid = [0.0; 3];
    let mut r2 = 0.0;
    for d in 0..dim {
        k[d] = v[d] - vs[d];
        mid[d] = 0.5 * (v[d] + vs[d]);
        r2 += k[d] * k[d];
    }
    if r2 == 0.0 {
        return 0.0;
    }
    let r = r2.sqrt();
    k.iter_mut().for_each(|x| *x /= r);
    let frame = Frame::new(&k[..dim]);
    let pw = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().powf(0.5 * sp);
    let base = pw(v) + pw(vs);
    let mut s = [0.0; 3];
    let mut acc = 0.0;
    for q in 0..sphere.len() {
        frame.apply(sphere.dir(q), &mut s[..dim]);
        let (mut a2, mut b2) = (0.0, 0.0);
        for d in 0..dim {
            let a = mid[d] + 0.5 * r * s[d];
            let b = mid[d] - 0.5 * r * s[d];
            a2 += a * a;
            b2 += b * b;
        }
        acc += sphere.weights()[q] * kernel.b(sphere.cos_theta(q)) * (a2.powf(0.5 * sp) + b2.powf(0.5 * sp) - base);
    }
    0.5 * acc
}

/// Samples pairs uniformly in the ball of radius `radius` and estimates α̂_p.
pub fn povzner_check(
    kernel: &CollisionKernelSpec,
    sphere: &SphereQuadrature,
    samples: usize,
    s: f64,
    ps: &[f64],
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PovznerReport> {
    let dim = kernel.dimension;
    if sphere.dim != dim {
        return Err(Error::GridMismatch("sphere and kernel dimensions differ".into()));
    }
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..radius)).collect();
            if x.iter().map(|c| c * c).sum::<f64>() <= radius * radius {
                return x;
            }
        }
    };
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..samples).map(|_| (draw(rng), draw(rng))).collect();
    let mut rows = Vec::new();
    for &p in ps {
        let sp = s * p;
        let mut sup: f64 = 0.0;
        let mut events = 0;
        for (v, vs) in &pairs {
            let n2 = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>();
            let e = n2(v) + n2(vs);
            if e == 0.0 || v == vs {
                continue;
            }
            let ratio = (k_p(kernel, sphere, v, vs, sp) + n2(v).powf(0.5 * sp) + n2(vs).powf(0.5 * sp)) / e.powf(0.5 * sp);
            if ratio >= 1.0 {
                events += 1;
            }
            sup = sup.max(ratio);
        }
        rows.push(PovznerRow { p, sp, alpha_hat: sup, events_ge_one: events, shape_constant: sup * (0.5 * sp + 1.0) });
    }
    let k_energy_max = pairs
        .iter()
        .map(|(v, vs)| {
            let e: f64 = v.iter().chain(vs.iter()).map(|c| c * c).sum();
            if e == 0.0 {
                0.0
            } else {
                k_p(kernel, sphere, v, vs, 2.0).abs() / e
            }
        })
        .fold(0.0, f64::max);
    let nonincreasing = rows.windows(2).all(|w| w[1].alpha_hat <= w[0].alpha_hat);
    let all_below_one = rows.iter().all(|r| r.alpha_hat < 1.0);
    Ok(PovznerReport { s, samples, rows, nonincreasing, all_below_one, k_energy_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity_space::maxwellian_field;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    #[test]
    fn maxwellian_moment_oracles() {
        let g = VelocityGrid::new(3, 31, 6.0).unwrap();
        let m = maxwellian_field(&g);
        let t = moment_table(&g, &m, 0.5, 2.0).unwrap();
        assert!((t[0].m_p - PI.powf(1.5)).abs() < 1e-9);
        // sp = 1: ∫|v| e^{−|v|²} dv = 2π; the kink of |v| at 0 limits the rule.
        assert!((t[4].m_p - 2.0 * PI).abs() < 2e-3 * 2.0 * PI, "{}", t[4].m_p);
        assert!((exp_moment(&g, &m, 0.0, 0.5).unwrap() - t[0].m_p).abs() < 1e-12);
    }

    #[test]
    fn energy_povzner_vanishes() {
        let k = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
        let sph = SphereQuadrature::default_for(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = povzner_check(&k, &sph, 200, 0.45, &[5.0, 10.0], 4.0, &mut rng).unwrap();
        assert!(r.k_energy_max < 1e-12);
        assert!(r.rows[1].alpha_hat <= r.rows[0].alpha_hat);
    }
}
