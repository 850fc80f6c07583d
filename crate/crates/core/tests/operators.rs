//! Operator-level checks against closed-form and independent-quadrature oracles.

use boltzgap_core::collision::{nu_at_origin, CollisionOperator};
use boltzgap_core::config::RunConfig;
use boltzgap_core::dynamics::{exp_moment, fit_decay_rate, moment_table};
use boltzgap_core::kernels::{ell_b, CollisionKernelSpec};
use boltzgap_core::linearized::{
    assemble_l, assemble_l_m, assemble_l_plus_delta, carleman_path_l_plus_delta, conjugation_defect, dirichlet_form,
    CarlemanOptions, Scaling,
};
use boltzgap_core::quadrature::Rule;
use boltzgap_core::spectral::{explicit_gap_lower_bound, gap_bound_formula};
use boltzgap_core::velocity_space::{
    h_functional, invariant, l1, maxwellian_field, maxwellian_with, n_invariants, DistributionField, Interpolation,
    SphereQuadrature, SphereRule, VelocityGrid, WeightFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn op2(n: usize) -> CollisionOperator {
    let grid = VelocityGrid::new(2, n, 5.0).unwrap();
    let sphere = SphereQuadrature::new(2, SphereRule::Circle { points: 32 }).unwrap();
    CollisionOperator::new(CollisionKernelSpec::hard_sphere(2, 0.5).unwrap(), grid, sphere, Interpolation::Quadratic, false)
        .unwrap()
}

fn op3(n: usize) -> CollisionOperator {
    let grid = VelocityGrid::new(3, n, 4.5).unwrap();
    let sphere = SphereQuadrature::new(3, SphereRule::GaussProduct { n_theta: 8, n_phi: 16 }).unwrap();
    CollisionOperator::new(CollisionKernelSpec::hard_sphere(3, 1.0).unwrap(), grid, sphere, Interpolation::Quadratic, false)
        .unwrap()
}

fn random_perturbation(grid: &VelocityGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn hard_sphere_collision_frequency_at_origin() {
    // ∫ |v*| e^{−|v*|²} dv* · ℓ_b = 4π ∫ r³ e^{−r²} dr = 2π.
    let k = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
    let radial = Rule::gauss_on(64, 0.0, 12.0).integrate(|r| 4.0 * PI * r.powi(3) * (-r * r).exp());
    assert!((radial - 2.0 * PI).abs() < 1e-12);
    assert!((nu_at_origin(&k, ell_b(&k).unwrap()) - 2.0 * PI).abs() < 1e-12);

    // Trapezoid error from the kink of |v*| at the origin: O(h²).
    let mut errs = Vec::new();
    for n in [11, 15] {
        let op = op3(n);
        let nu = op.collision_frequency();
        let origin = (0..op.grid.len()).find(|&i| op.grid.speed2(i) == 0.0).unwrap();
        errs.push((nu.nu[origin] - 2.0 * PI).abs() / (2.0 * PI));
        assert!(nu.n0 > 0.0 && nu.n1 < f64::INFINITY && nu.n0 <= nu.n1);
    }
    assert!(errs[1] < 1e-2 && errs[1] < errs[0], "{errs:?}");
}

#[test]
fn collision_frequency_is_radial_and_increasing() {
    let op = op2(21);
    let nu = op.collision_frequency().nu;
    let g = &op.grid;
    // Along the positive first axis, inside the box away from the boundary.
    let mut axis: Vec<(f64, f64)> =
        (0..g.len()).filter(|&i| g.node(i)[1] == 0.0 && g.node(i)[0] >= 0.0 && g.node(i)[0] <= 3.0).map(|i| (g.node(i)[0], nu[i])).collect();
    axis.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(axis.windows(2).all(|w| w[1].1 > w[0].1), "{axis:?}");
    for i in 0..g.len() {
        let j = g.mirror(i);
        assert!((nu[i] - nu[j]).abs() <= 1e-12 * nu[i]);
    }
}

#[test]
fn equilibrium_gain_balances_loss() {
    let op = op2(31);
    let m = maxwellian_field(&op.grid);
    let gain = op.q_plus(&m, &m).unwrap();
    let loss = op.q_minus(&m, &m).unwrap();
    let nu = op.collision_frequency().nu;
    let scale = l1(&op.grid, &loss.values);
    let mut err = 0.0;
    for i in 0..op.grid.len() {
        assert!((loss.values[i] - nu[i] * m.values[i]).abs() <= 1e-12 * scale);
        if op.grid.speed2(i) <= 9.0 {
            err += op.grid.weight(i) * (gain.values[i] - loss.values[i]).abs();
        }
    }
    assert!(err / scale < 1e-2, "relative L¹ imbalance {err}");
}

#[test]
fn maxwellians_produce_no_entropy() {
    let op = op2(31);
    for f in [maxwellian_field(&op.grid), maxwellian_with(&op.grid, 1.3, &[0.4, -0.2], 0.6)] {
        let (d, _) = op.entropy_production(&f).unwrap();
        let gain = op.q_plus_raw(&f.values, &f.values);
        let loss = op.q_minus_raw(&f.values, &f.values);
        let scale: f64 = (0..op.grid.len())
            .map(|i| op.grid.weight(i) * (gain[i].abs() + loss[i].abs()) * f.values[i].max(1e-300).ln().abs())
            .sum();
        assert!(d.abs() <= 1e-2 * scale.max(1e-12), "D = {d}, scale {scale}");
    }
    let bimodal = DistributionField::from_fn(&op.grid, |v| {
        (-(v[0] - 1.2).powi(2) - v[1] * v[1]).exp() + (-(v[0] + 1.2).powi(2) - v[1] * v[1]).exp()
    });
    assert!(op.entropy_production(&bimodal).unwrap().0 > 0.0);
}

#[test]
fn entropy_of_uniform_and_maxwellian() {
    let g = VelocityGrid::new(3, 21, 5.0).unwrap();
    let ones = DistributionField::plain(&g, vec![1.0; g.len()]).unwrap();
    assert_eq!(h_functional(&g, &ones).unwrap(), 0.0);
    let h = h_functional(&g, &maxwellian_field(&g)).unwrap();
    let oracle = -1.5 * PI.powf(1.5);
    assert!((h - oracle).abs() < 1e-6 * oracle.abs(), "{h} vs {oracle}");
}

#[test]
fn linearized_operator_kills_invariants_and_is_dissipative() {
    let op = op2(21);
    let l = assemble_l(&op);
    let g = &op.grid;
    let scale = l.matrix().norm_max();
    for a in 0..n_invariants(g) {
        let phi: Vec<f64> = (0..g.len()).map(|i| invariant(g, a, i)).collect();
        let out = l.apply(&phi);
        // Away from the box boundary, where truncation of M-weighted tails is negligible.
        let inner = (0..g.len()).filter(|&i| g.speed2(i) <= 4.0).map(|i| out[i].abs()).fold(0.0, f64::max);
        assert!(inner <= 2e-2 * scale * phi.iter().map(|x| x.abs()).fold(0.0, f64::max), "invariant {a}: {inner}");
    }
    let nu0 = op.collision_frequency().nu0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let h = random_perturbation(g, &mut rng);
        let hh: f64 = (0..g.len()).map(|i| g.weight(i) * (-g.speed2(i)).exp() * h[i] * h[i]).sum();
        assert!(dirichlet_form(g, &l, &h) <= 1e-2 * nu0 * hh);
    }
}

#[test]
fn stretched_operator_is_a_conjugate_of_l() {
    let op = op2(21);
    let l = assemble_l(&op);
    let lm = assemble_l_m(&op, 0.5, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<Vec<f64>> = (0..10).map(|_| random_perturbation(&op.grid, &mut rng)).collect();
    let rep = conjugation_defect(&op.grid, &l, &lm, &samples);
    assert!(rep.max_relative_defect < 1e-10, "{rep:?}");
    assert!(assemble_l_m(&op, 0.5, 0.3).is_err());
}

#[test]
fn carleman_path_matches_sigma_path() {
    let op = op2(21);
    let scaling = Scaling::Stretched { a: 0.5, s: 0.1 };
    let w = WeightFunction::Stretched { a: 0.5, s: 0.1 };
    let g = &op.grid;
    // m⁻¹M, the image of 1 ∈ N(L).
    let x: Vec<f64> = g.speeds2().iter().map(|&v2| (-v2).exp() / w.eval_sq(v2)).collect();
    for delta in [0.4, 0.3] {
        let sigma = assemble_l_plus_delta(&op, delta, scaling).unwrap();
        let carl = carleman_path_l_plus_delta(g, &op.kernel, delta, scaling, &CarlemanOptions::default()).unwrap();
        let apply = |a: &faer::Mat<f64>| -> Vec<f64> { (0..g.len()).map(|i| (0..g.len()).map(|j| a[(i, j)] * x[j]).sum()).collect() };
        let (ys, yc) = (apply(&sigma), apply(&carl));
        let diff: Vec<f64> = ys.iter().zip(&yc).map(|(a, b)| a - b).collect();
        let rel = l1(g, &diff) / l1(g, &ys);
        assert!(rel < 5e-2, "δ = {delta}: relative deviation {rel}");
    }
    let zero = vec![0.0; g.len()];
    let carl = carleman_path_l_plus_delta(g, &op.kernel, 0.4, scaling, &CarlemanOptions::default()).unwrap();
    assert!((0..g.len()).all(|i| (0..g.len()).map(|j| carl[(i, j)] * zero[j]).sum::<f64>() == 0.0));
}

#[test]
fn explicit_bound_values() {
    let hs = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
    let unit = gap_bound_formula(1.0, 1.0, 1.0);
    assert!((unit - PI / (48.0 * (2.0 * std::f64::consts::E).sqrt())).abs() < 1e-15);
    assert!((unit - 0.0281).abs() < 5e-5);
    // b ≡ 1/(4π) on S²: c_b = 1/(4π) scales the bound.
    assert!((explicit_gap_lower_bound(&hs) - unit * hs.b(0.3)).abs() < 1e-15);
    let half = gap_bound_formula(1.0, 1.0, 0.5);
    let by_hand = 0.0625f64.powf(0.25) * (-0.25f64).exp() * PI / 24.0;
    assert!((half - by_hand).abs() < 1e-15);
    assert!((gap_bound_formula(2.0, 3.0, 0.5) - 6.0 * half).abs() < 1e-15);
}

#[test]
fn decay_fit_on_noisy_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t: Vec<f64> = (0..60).map(|k| k as f64 * 0.1).collect();
    let y: Vec<f64> = t.iter().map(|&t| 3.0 * (-0.5 * t).exp() + 1e-6 * rng.random_range(-1.0..1.0)).collect();
    let fit = fit_decay_rate(&t, &y, (0.0, 6.0)).unwrap();
    assert!((fit.mu - 0.5).abs() < 1e-4 && (fit.c - 3.0).abs() < 1e-4, "{fit:?}");
}

#[test]
fn moments_of_the_maxwellian() {
    let g = VelocityGrid::new(3, 25, 5.0).unwrap();
    let m = maxwellian_field(&g);
    let mass = PI.powf(1.5);
    let table = moment_table(&g, &m, 0.5, 2.0).unwrap();
    assert!((table[0].m_p - mass).abs() < 1e-8 * mass);
    assert!((exp_moment(&g, &m, 0.0, 0.5).unwrap() - mass).abs() < 1e-8 * mass);
    // ∫ e^{0.5|v|^{1/2}} e^{−|v|²} dv by 1-D radial quadrature.
    let oracle = Rule::composite(48, &[0.0, 1.0, 3.0, 7.0]).integrate(|r| 4.0 * PI * r * r * (0.5 * r.sqrt() - r * r).exp());
    let got = exp_moment(&g, &m, 0.5, 0.5).unwrap();
    assert!((got - oracle).abs() < 5e-3 * oracle, "{got} vs {oracle}");
}

#[test]
fn loaded_config_rejects_unknown_keys() {
    let text = r#"{"kernel": {"dimension": 2, "gamma": 0.5, "colour": 1}, "grid": {"n": 15, "extent": 5}, "weight": {"a": 0.5, "s": 0.1}}"#;
    let err = RunConfig::from_json(text).unwrap_err().to_string();
    assert!(err.contains("kernel") && err.contains("colour"), "{err}");
}
