//! Timings of the dense kernels: gain evaluation, operator assembly and the
//! symmetric eigensolve, on grids small enough for repeated sampling.

use boltzgap_core::collision::CollisionOperator;
use boltzgap_core::kernels::CollisionKernelSpec;
use boltzgap_core::linearized::{assemble_psi_parts, symmetric_l};
use boltzgap_core::spectral::sym_eigen;
use boltzgap_core::velocity_space::{maxwellian_field, Interpolation, SphereQuadrature, SphereRule, VelocityGrid};
use criterion::{black_box, BenchmarkId, Criterion};

pub fn operator(dim: usize, n: usize) -> CollisionOperator {
    let (extent, rule) = match dim {
        2 => (5.0, SphereRule::Circle { points: 32 }),
        _ => (4.5, SphereRule::GaussProduct { n_theta: 8, n_phi: 16 }),
    };
    let grid = VelocityGrid::new(dim, n, extent).unwrap();
    let sphere = SphereQuadrature::new(dim, rule).unwrap();
    let kernel = CollisionKernelSpec::hard_sphere(dim, if dim == 2 { 0.5 } else { 1.0 }).unwrap();
    CollisionOperator::new(kernel, grid, sphere, Interpolation::Quadratic, true).unwrap()
}

pub fn benchmarks(c: &mut Criterion) {
    let mut g = c.benchmark_group("gain");
    g.sample_size(10);
    for (dim, n) in [(2, 21), (2, 41), (3, 9)] {
        let op = operator(dim, n);
        let f = maxwellian_field(&op.grid).values;
        g.bench_with_input(BenchmarkId::new(format!("N{dim}"), n), &f, |b, f| b.iter(|| op.q_plus_raw(black_box(f), f)));
    }
    g.finish();

    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for n in [15, 21] {
        let op = operator(2, n);
        g.bench_function(BenchmarkId::new("N2", n), |b| b.iter(|| assemble_psi_parts(black_box(&op))));
    }
    g.finish();

    let mut g = c.benchmark_group("eigensolve");
    g.sample_size(10);
    for n in [15, 21] {
        let op = operator(2, n);
        let sl = symmetric_l(&op.grid, &assemble_psi_parts(&op));
        g.bench_function(BenchmarkId::new("N2", n), |b| b.iter(|| sym_eigen(black_box(&sl.projected)).unwrap()));
    }
    g.finish();
}
