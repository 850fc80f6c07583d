//! Nonlinear collision operator Q = Q⁺ − Q⁻ on a velocity grid (σ-representation).
//!
//! Post-collisional values are interpolated in the variable ψ = f/√M and
//! the Gaussian factor is restored exactly through √(M(v')M(v'_*)) = √(M(v)M(v_*)):
//!
//!   Q⁺(g,f)_i = √M_i Σ_j w_j √M_j Φ_ij Σ_k w_k b_k Î[g/√M](v'_*) Î[f/√M](v').
//!
//! The loss term uses the discrete sphere mass ℓ̂_b = Σ_k w_k b_k so that
//! gain and loss share one angular quadrature.

use crate::error::{Error, Result};
use crate::kernels::CollisionKernelSpec;
use crate::linalg::solve_small;
use crate::quadrature::pairwise_sum_by;
use crate::velocity_space::{
    invariant, invariant_moments, n_invariants, DistributionField, Frame, Interpolation, SphereQuadrature,
    SphereRule, Stencil, VelocityGrid, WeightConvention,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionOperatorConfig {
    pub kernel: CollisionKernelSpec,
    pub sphere: SphereRule,
    pub interpolation: Interpolation,
    pub conservation_projection: bool,
}

#[derive(Debug, Clone)]
pub struct CollisionOperator {
    pub kernel: CollisionKernelSpec,
    pub grid: VelocityGrid,
    pub sphere: SphereQuadrature,
    pub interp: Interpolation,
    pub projection: bool,
    /// w_k · b(cos θ_k) (or a replacement profile).
    wb: Vec<f64>,
    ell_hat: f64,
    sqrt_m: Vec<f64>,
    active: Vec<bool>,
    cutoff: Option<f64>,
}

impl CollisionOperator {
    pub fn new(
        kernel: CollisionKernelSpec,
        grid: VelocityGrid,
        sphere: SphereQuadrature,
        interp: Interpolation,
        projection: bool,
    ) -> Result<Self> {
        if kernel.dimension != grid.dim || sphere.dim != grid.dim {
            return Err(Error::config(
                "kernel.dimension",
                format!("kernel N={}, grid N={}, sphere N={}", kernel.dimension, grid.dim, sphere.dim),
            ));
        }
        let wb: Vec<f64> = (0..sphere.len()).map(|k| sphere.weights()[k] * kernel.b(sphere.cos_theta(k))).collect();
        let ell_hat = wb.iter().sum();
        let sqrt_m = grid.speeds2().iter().map(|v2| (-0.5 * v2).exp()).collect();
        let active = vec![true; grid.len()];
        Ok(CollisionOperator { kernel, grid, sphere, interp, projection, wb, ell_hat, sqrt_m, active, cutoff: None })
    }

    pub fn from_config(cfg: &CollisionOperatorConfig, grid: VelocityGrid) -> Result<Self> {
        let sphere = SphereQuadrature::new(grid.dim, cfg.sphere.clone())?;
        Self::new(cfg.kernel.clone(), grid, sphere, cfg.interpolation, cfg.conservation_projection)
    }

    /// Replaces the angular profile at the sphere nodes (e.g. by b_δ).
    pub fn with_angular(mut self, b: impl Fn(f64) -> f64) -> Self {
        self.wb = (0..self.sphere.len()).map(|k| self.sphere.weights()[k] * b(self.sphere.cos_theta(k))).collect();
        self.ell_hat = self.wb.iter().sum();
        self
    }

    /// Restricts outputs and collision partners to the ball |v| ≤ radius.
    pub fn with_cutoff(mut self, radius: f64) -> Self {
        self.cutoff = Some(radius);
        self.active = self.grid.speeds2().iter().map(|&v2| v2 <= radius * radius).collect();
        self
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// Discrete sphere mass ℓ̂_b.
    pub fn ell_hat(&self) -> f64 {
        self.ell_hat
    }

    pub fn sqrt_maxwellian(&self) -> &[f64] {
        &self.sqrt_m
    }

    pub fn angular_weights(&self) -> &[f64] {
        &self.wb
    }

    /// (k, weight) pairs; with `symmetric` the antipodal pairs are merged
    /// (valid whenever the integrand is invariant under σ ↦ −σ).
    pub(crate) fn angular_list(&self, symmetric: bool) -> Vec<(usize, f64)> {
        if symmetric {
            if let (Some(h), Some(a)) = (self.sphere.hemisphere(), self.sphere.antipodes()) {
                return h.into_iter().map(|k| (k, self.wb[k] + self.wb[a[k]])).filter(|p| p.1 != 0.0).collect();
            }
        }
        (0..self.sphere.len()).map(|k| (k, self.wb[k])).filter(|p| p.1 != 0.0).collect()
    }

    /// Visits every collision (j, σ_k) contributing to output node i.
    /// The callback receives j, w_j Φ_ij (weight of the partner), the angular
    /// weight, and stencils for v' and v'_* (None outside the box).
    #[inline(always)]
    pub(crate) fn for_each_collision<F>(&self, i: usize, angles: &[(usize, f64)], mut visit: F)
    where
        F: FnMut(usize, f64, f64, Option<&Stencil>, Option<&Stencil>),
    {
        let g = &self.grid;
        let dim = g.dim;
        let vi = g.node(i);
        let mut k = [0.0; 3];
        let mut mid = [0.0; 3];
        let mut s = [0.0; 3];
        let mut vp = [0.0; 3];
        let mut vs = [0.0; 3];
        for j in 0..g.len() {
            if j == i || !self.active[j] {
                continue;
            }
            let vj = g.node(j);
            let mut r2 = 0.0;
            for d in 0..dim {
                k[d] = vi[d] - vj[d];
                mid[d] = 0.5 * (vi[d] + vj[d]);
                r2 += k[d] * k[d];
            }
            let r = r2.sqrt();
            let phi = self.kernel.phi_unchecked(r);
            let cj = g.weight(j) * phi;
            if cj == 0.0 {
                continue;
            }
            for d in 0..dim {
                k[d] /= r;
            }
            let frame = Frame::new(&k[..dim]);
            let half = 0.5 * r;
            for &(kk, wk) in angles {
                frame.apply(self.sphere.dir(kk), &mut s[..dim]);
                for d in 0..dim {
                    vp[d] = mid[d] + half * s[d];
                    vs[d] = mid[d] - half * s[d];
                }
                let sp = g.stencil(&vp[..dim], self.interp);
                let ss = g.stencil(&vs[..dim], self.interp);
                visit(j, cj, wk, sp.as_ref(), ss.as_ref());
            }
        }
    }

    fn psi_of(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.sqrt_m).map(|(v, s)| v / s).collect()
    }

    fn check(&self, f: &DistributionField) -> Result<()> {
        f.check_grid(&self.grid)?;
        if f.convention != WeightConvention::Plain {
            return Err(Error::domain("collision operator acts on plain node values"));
        }
        Ok(())
    }

    /// Q⁺(g, f) on raw node values.
    pub fn q_plus_raw(&self, g: &[f64], f: &[f64]) -> Vec<f64> {
        let same = std::ptr::eq(g, f) || g == f;
        let pg = self.psi_of(g);
        let pf = if same { pg.clone() } else { self.psi_of(f) };
        let angles = self.angular_list(same);
        let (n, dim) = (self.grid.n, self.grid.dim);
        (0..self.grid.len())
            .map(|i| {
                if !self.active[i] {
                    return 0.0;
                }
                let mut acc = 0.0;
                let mut last_j = usize::MAX;
                let mut inner = 0.0;
                self.for_each_collision(i, &angles, |j, cj, wk, sp, ss| {
                    if j != last_j {
                        if last_j != usize::MAX {
                            acc += inner * self.sqrt_m[last_j];
                        }
                        last_j = j;
                        inner = 0.0;
                    }
                    if let (Some(sp), Some(ss)) = (sp, ss) {
                        inner += cj * wk * ss.eval(&pg, n, dim) * sp.eval(&pf, n, dim);
                    }
                });
                if last_j != usize::MAX {
                    acc += inner * self.sqrt_m[last_j];
                }
                self.sqrt_m[i] * acc
            })
            .collect()
    }

    /// Φ * g weighted by ℓ̂_b, i.e. ℓ̂_b Σ_j w_j Φ_ij g_j.
    pub fn loss_rate(&self, g: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let mut out = vec![0.0; grid.len()];
        for (i, o) in out.iter_mut().enumerate() {
            if !self.active[i] {
                continue;
            }
            let vi = grid.node(i);
            let s = pairwise_sum_by(grid.len(), |j| {
                if !self.active[j] || j == i {
                    return 0.0;
                }
                let r2: f64 = vi.iter().zip(grid.node(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                grid.weight(j) * self.kernel.phi_unchecked(r2.sqrt()) * g[j]
            });
            *o = self.ell_hat * s;
        }
        out
    }

    pub fn q_minus_raw(&self, g: &[f64], f: &[f64]) -> Vec<f64> {
        self.loss_rate(g).iter().zip(f).map(|(a, b)| a * b).collect()
    }

    pub fn q_plus(&self, g: &DistributionField, f: &DistributionField) -> Result<DistributionField> {
        self.check(g)?;
        self.check(f)?;
        DistributionField::plain(&self.grid, self.q_plus_raw(&g.values, &f.values))
    }

    pub fn q_minus(&self, g: &DistributionField, f: &DistributionField) -> Result<DistributionField> {
        self.check(g)?;
        self.check(f)?;
        DistributionField::plain(&self.grid, self.q_minus_raw(&g.values, &f.values))
    }

    /// Q(f,f) before projection.
    pub fn q_unprojected(&self, f: &[f64]) -> Vec<f64> {
        let gain = self.q_plus_raw(f, f);
        let loss = self.q_minus_raw(f, f);
        gain.iter().zip(&loss).map(|(a, b)| a - b).collect()
    }

    /// Q(f,f); with projection enabled the collision-invariant moments are
    /// removed by the minimal L²(M⁻¹) shift.
    pub fn q(&self, f: &DistributionField) -> Result<DistributionField> {
        self.check(f)?;
        let mut q = self.q_unprojected(&f.values);
        if self.projection {
            conservation_projection(&self.grid, &mut q)?;
        }
        DistributionField::plain(&self.grid, q)
    }

    /// Relative defects |Σ w Q φ_a| / Σ w |φ_a| (Q⁺ + Q⁻) per collision invariant.
    pub fn conservation_defects(&self, f: &[f64]) -> Vec<f64> {
        let gain = self.q_plus_raw(f, f);
        let loss = self.q_minus_raw(f, f);
        let q: Vec<f64> = gain.iter().zip(&loss).map(|(a, b)| a - b).collect();
        relative_defects(&self.grid, &q, &gain, &loss)
    }

    /// D(f) = −Σ w Q(f,f) log f, with log floored at 1e-300 (count returned).
    pub fn entropy_production(&self, f: &DistributionField) -> Result<(f64, usize)> {
        self.check(f)?;
        if let Some(v) = f.values.iter().find(|v| **v < 0.0) {
            return Err(Error::domain(format!("entropy production needs f ≥ 0, found {v}")));
        }
        let q = self.q(f)?;
        Ok(entropy_production_of(&self.grid, &f.values, &q.values))
    }

    pub fn collision_frequency(&self) -> CollisionFrequency {
        let m: Vec<f64> = self.sqrt_m.iter().map(|s| s * s).collect();
        let nu = self.loss_rate(&m);
        CollisionFrequency::from_values(&self.grid, self.kernel.gamma, nu)
    }

    pub fn diagnostics(&self, f: &DistributionField) -> Result<CollisionDiagnostics> {
        let freq = self.collision_frequency();
        let (d, floored) = self.entropy_production(f)?;
        Ok(CollisionDiagnostics {
            conservation_defects: self.conservation_defects(&f.values),
            nu0: freq.nu0,
            n0: freq.n0,
            n1: freq.n1,
            entropy_production: d,
            log_floored_nodes: floored,
        })
    }
}

pub fn entropy_production_of(grid: &VelocityGrid, f: &[f64], q: &[f64]) -> (f64, usize) {
    let mut floored = 0;
    let logs: Vec<f64> = f
        .iter()
        .map(|&v| {
            if v < 1e-300 {
                floored += 1;
                1e-300f64.ln()
            } else {
                v.ln()
            }
        })
        .collect();
    let w = grid.weights();
    (-pairwise_sum_by(grid.len(), |i| w[i] * q[i] * logs[i]), floored)
}

pub fn relative_defects(grid: &VelocityGrid, q: &[f64], gain: &[f64], loss: &[f64]) -> Vec<f64> {
    let mq = invariant_moments(grid, q);
    let w = grid.weights();
    (0..n_invariants(grid))
        .map(|a| {
            let scale = pairwise_sum_by(grid.len(), |i| w[i] * invariant(grid, a, i).abs() * (gain[i].abs() + loss[i].abs()));
            if scale > 0.0 {
                mq[a].abs() / scale
            } else {
                0.0
            }
        })
        .collect()
}

/// Subtracts M Σ c_a φ_a so that all collision-invariant moments of `q` vanish.
/// Returns the L¹ norm of the correction.
pub fn conservation_projection(grid: &VelocityGrid, q: &mut [f64]) -> Result<f64> {
    let na = n_invariants(grid);
    let w = grid.weights();
    let m: Vec<f64> = grid.speeds2().iter().map(|v2| (-v2).exp()).collect();
    let mut gram = vec![0.0; na * na];
    for a in 0..na {
        for b in a..na {
            let s = pairwise_sum_by(grid.len(), |i| w[i] * m[i] * invariant(grid, a, i) * invariant(grid, b, i));
            gram[a * na + b] = s;
            gram[b * na + a] = s;
        }
    }
    let mom = invariant_moments(grid, q);
    let c = solve_small(gram, mom).ok_or_else(|| Error::numerical("singular invariant Gram matrix"))?;
    let mut corr = 0.0;
    for i in 0..grid.len() {
        let s: f64 = (0..na).map(|a| c[a] * invariant(grid, a, i)).sum::<f64>() * m[i];
        q[i] -= s;
        corr += w[i] * s.abs();
    }
    Ok(corr)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionFrequency {
    pub nu: Vec<f64>,
    pub nu0: f64,
    pub n0: f64,
    pub n1: f64,
}

impl CollisionFrequency {
    pub fn from_values(grid: &VelocityGrid, gamma: f64, nu: Vec<f64>) -> Self {
        let nu0 = nu.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratios = grid.speeds2().iter().zip(&nu).map(|(&v2, &n)| n / (1.0 + v2).powf(0.5 * gamma));
        let (n0, n1) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        CollisionFrequency { nu, nu0, n0, n1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionDiagnostics {
    pub conservation_defects: Vec<f64>,
    pub nu0: f64,
    pub n0: f64,
    pub n1: f64,
    pub entropy_production: f64,
    pub log_floored_nodes: usize,
}

/// ν(0) for a kernel in closed form: C_Φ ℓ_b |S^{N−1}| Γ((N+γ)/2) / 2.
pub fn nu_at_origin(kernel: &CollisionKernelSpec, ell_b: f64) -> f64 {
    let n = kernel.dimension as f64;
    kernel.c_phi * ell_b * crate::kernels::sphere_area(kernel.dimension) * statrs::function::gamma::gamma(0.5 * (n + kernel.gamma))
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity_space::maxwellian_field;

    fn op2() -> CollisionOperator {
        let k = CollisionKernelSpec::hard_sphere(2, 0.5).unwrap();
        let g = VelocityGrid::new(2, 21, 5.0).unwrap();
        let s = SphereQuadrature::default_for(2).unwrap();
        CollisionOperator::new(k, g, s, Interpolation::Quadratic, false).unwrap()
    }

    #[test]
    fn bilinearity_zero() {
        let op = op2();
        let z = vec![0.0; op.grid.len()];
        let m = maxwellian_field(&op.grid).values;
        assert!(op.q_plus_raw(&z, &m).iter().all(|v| *v == 0.0));
        assert!(op.q_minus_raw(&m, &z).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hemisphere_shortcut_matches_full_sum() {
        let op = op2();
        let f: Vec<f64> = (0..op.grid.len()).map(|i| (-op.grid.speed2(i)).exp() * (1.0 + 0.3 * op.grid.node(i)[0])).collect();
        let a = op.q_plus_raw(&f, &f);
        // Unequal slots take the full-sphere path; undo the scaling by bilinearity.
        let full: Vec<f64> = {
            let eps = 1e-3;
            let mut gp = f.clone();
            gp.iter_mut().for_each(|v| *v *= 1.0 + eps);
            op.q_plus_raw(&gp, &f).iter().map(|v| v / (1.0 + eps)).collect()
        };
        let top = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&full) {
            assert!((x - y).abs() < 1e-12 * top);
        }
    }

    #[test]
    fn single_node_convolution() {
        let op = op2();
        let c = op.grid.len() / 2;
        let mut g = vec![0.0; op.grid.len()];
        g[c] = 1.0 / op.grid.weight(c);
        let f = maxwellian_field(&op.grid).values;
        let q = op.q_minus_raw(&g, &f);
        for i in 0..op.grid.len() {
            let expect = op.ell_hat() * op.kernel.phi_unchecked(op.grid.speed2(i).sqrt()) * f[i];
            assert!((q[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_zeroes_moments() {
        let op = op2();
        let mut q: Vec<f64> = (0..op.grid.len()).map(|i| (i as f64).sin() * (-op.grid.speed2(i) / 3.0).exp()).collect();
        conservation_projection(&op.grid, &mut q).unwrap();
        let mom = invariant_moments(&op.grid, &q);
        assert!(mom.iter().all(|m| m.abs() < 1e-13), "{mom:?}");
    }
}
