//! Property-based checks of the structural invariants.

use boltzgap_core::collision::{conservation_projection, CollisionOperator};
use boltzgap_core::config::{preset, RunConfig};
use boltzgap_core::fit::fit_decay_rate;
use boltzgap_core::kernels::{CollisionKernelSpec, Mollifier, MollifierConfig};
use boltzgap_core::velocity_space::{
    invariant_moments, maxwellian_with, DistributionField, Frame, Interpolation, SphereQuadrature, SphereRule, VelocityGrid,
    WeightFunction,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn small_op() -> &'static CollisionOperator {
    static OP: OnceLock<CollisionOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let grid = VelocityGrid::new(2, 13, 4.5).unwrap();
        let sphere = SphereQuadrature::new(2, SphereRule::Circle { points: 16 }).unwrap();
        CollisionOperator::new(CollisionKernelSpec::hard_sphere(2, 1.0).unwrap(), grid, sphere, Interpolation::Quadratic, true)
            .unwrap()
    })
}

/// Positive field: a Maxwellian mixture with the given parameters.
fn mixture(grid: &VelocityGrid, params: &[(f64, f64, f64, f64)]) -> DistributionField {
    let mut v = vec![0.0; grid.len()];
    for &(rho, ux, uy, t) in params {
        let m = maxwellian_with(grid, rho, &[ux, uy], t);
        v.iter_mut().zip(&m.values).for_each(|(a, b)| *a += b);
    }
    DistributionField::plain(grid, v).unwrap()
}

fn component() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.5..1.5f64, -0.5..0.5f64, -0.5..0.5f64, 0.3..0.7f64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn gain_is_bilinear(
        a in prop::collection::vec(-1.0..1.0f64, 169),
        b in prop::collection::vec(-1.0..1.0f64, 169),
        f in prop::collection::vec(-1.0..1.0f64, 169),
        c in -2.0..2.0f64,
    ) {
        let op = small_op();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| c * x + y).collect();
        let lhs = op.q_plus_raw(&ab, &f);
        let (qa, qb) = (op.q_plus_raw(&a, &f), op.q_plus_raw(&b, &f));
        let scale = qa.iter().chain(&qb).map(|x| x.abs()).fold(1e-300, f64::max);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (c * qa[i] + qb[i])).abs() <= 1e-12 * (1.0 + c.abs()) * scale);
        }
    }

    #[test]
    fn projected_q_conserves_invariants(params in prop::collection::vec(component(), 1..4)) {
        let op = small_op();
        let f = mixture(&op.grid, &params);
        let q = op.q(&f).unwrap();
        let scale: f64 = op.q_unprojected(&f.values).iter().zip(op.grid.weights()).map(|(q, w)| w * q.abs()).sum();
        for m in invariant_moments(&op.grid, &q.values) {
            prop_assert!(m.abs() <= 1e-12 * scale.max(1e-300));
        }
    }

    #[test]
    fn projection_is_idempotent(q in prop::collection::vec(-1.0..1.0f64, 169)) {
        let grid = &small_op().grid;
        let mut once = q.clone();
        conservation_projection(grid, &mut once).unwrap();
        let mut twice = once.clone();
        let corr = conservation_projection(grid, &mut twice).unwrap();
        prop_assert!(corr <= 1e-12 * q.iter().map(|x| x.abs()).sum::<f64>());
    }

    #[test]
    fn entropy_production_is_nonnegative(params in prop::collection::vec(component(), 1..4)) {
        let op = small_op();
        let f = mixture(&op.grid, &params);
        let (d, _) = op.entropy_production(&f).unwrap();
        let scale: f64 = op.q_unprojected(&f.values).iter().zip(op.grid.weights()).map(|(q, w)| w * q.abs()).sum();
        prop_assert!(d >= -1e-8 * scale, "D = {d}");
    }

    #[test]
    fn q_commutes_with_reflection(params in prop::collection::vec(component(), 1..3)) {
        let op = small_op();
        let g = &op.grid;
        let f = mixture(g, &params);
        let flipped: Vec<f64> = (0..g.len()).map(|i| f.values[g.mirror(i)]).collect();
        let qf = op.q_unprojected(&f.values);
        let qr = op.q_unprojected(&flipped);
        let scale = qf.iter().map(|x| x.abs()).fold(1e-300, f64::max);
        for i in 0..g.len() {
            prop_assert!((qr[i] - qf[g.mirror(i)]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn stretched_weight_inequality(
        v in prop::array::uniform3(-4.0..4.0f64),
        vs in prop::array::uniform3(-4.0..4.0f64),
        ct in -1.0..1.0f64,
        phi in 0.0..std::f64::consts::TAU,
        a in 0.05..2.0f64,
        s in 0.01..0.5f64,
    ) {
        // σ-representation: v′ = (v + v*)/2 + |v − v*|/2 · σ.
        let st = (1.0 - ct * ct).sqrt();
        let local = [st * phi.cos(), st * phi.sin(), ct];
        let k: Vec<f64> = (0..3).map(|d| v[d] - vs[d]).collect();
        let z = k.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut sigma = [0.0; 3];
        if z > 0.0 {
            Frame::new(&k.iter().map(|x| x / z).collect::<Vec<_>>()).apply(&local, &mut sigma);
        }
        let vp: Vec<f64> = (0..3).map(|d| 0.5 * (v[d] + vs[d]) + 0.5 * z * sigma[d]).collect();
        let sq = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>();
        let m = WeightFunction::Stretched { a, s };
        let lhs = m.eval_sq(sq(&v)) * (-sq(&vs)).exp() / m.eval_sq(sq(&vp));
        let rhs = (a * sq(&vs).powf(0.5 * s) - sq(&vs)).exp();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn mollified_profiles_stay_in_range(delta in 0.05..0.9f64, z in -1.0..1.0f64, r in 0.0..25.0f64, dr in 0.0..1.0f64) {
        let spec = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
        let moll = Mollifier::new(MollifierConfig::new(delta), 3).unwrap();
        let bd = moll.b_delta(&spec, z);
        prop_assert!(bd >= 0.0 && bd <= spec.b(z) * (1.0 + 1e-12));
        let (i0, i1) = (moll.indicator(r), moll.indicator(r + dr));
        prop_assert!((0.0..=1.0).contains(&i0));
        prop_assert!(i1 <= i0 + 1e-12);
    }

    #[test]
    fn decay_fit_recovers_exponentials(mu in 0.01..5.0f64, c in 1e-3..1e3f64, n in 3usize..40) {
        let t: Vec<f64> = (0..n).map(|k| k as f64 * 0.7 / mu).collect();
        let y: Vec<f64> = t.iter().map(|t| c * (-mu * t).exp()).collect();
        let fit = fit_decay_rate(&t, &y, (0.0, f64::INFINITY)).unwrap();
        prop_assert!((fit.mu - mu).abs() <= 1e-9 * mu);
        prop_assert!((fit.c - c).abs() <= 1e-8 * c);
    }

    #[test]
    fn config_round_trips(n in 5usize..40, extent in 2.0..8.0f64, gamma in 0.05..1.0f64, frac in 0.05..0.95f64, a in 0.01..3.0f64) {
        let mut cfg = preset("hard_potential_gamma_half_n2").unwrap();
        cfg.grid.n = 2 * (n / 2) + 1;
        cfg.grid.extent = extent;
        cfg.kernel.gamma = gamma;
        cfg.weight.a = a;
        cfg.weight.s = frac * gamma / 2.0;
        cfg.experiment.second_weight = None;
        cfg.experiment.moment_s = None;
        cfg.validate().unwrap();
        prop_assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
