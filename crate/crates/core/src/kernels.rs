//! Collision kernels B = Φ(|v − v_*|) b(cos θ) for hard potentials with
//! angular cutoff, and the mollified ingredients b_δ and I_δ.

use crate::error::{Error, Result};
use crate::quadrature::Rule;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Surface measure |S^{d−1}| of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularProfile {
    /// Constant profile.
    HardSphere,
    /// Piecewise-linear table in cos θ; nodes must be increasing and span [−1, 1].
    Tabulated { cos_theta: Vec<f64>, values: Vec<f64> },
}

impl AngularProfile {
    fn raw(&self, z: f64) -> f64 {
        match self {
            AngularProfile::HardSphere => 1.0,
            AngularProfile::Tabulated { cos_theta, values } => {
                let z = z.clamp(-1.0, 1.0);
                let k = cos_theta.partition_point(|&c| c <= z).clamp(1, cos_theta.len() - 1);
                let (c0, c1) = (cos_theta[k - 1], cos_theta[k]);
                let t = (z - c0) / (c1 - c0);
                values[k - 1] * (1.0 - t) + values[k] * t
            }
        }
    }

    /// Breakpoints in cos θ (panel boundaries for quadrature).
    fn breaks(&self) -> Vec<f64> {
        match self {
            AngularProfile::HardSphere => vec![-1.0, 1.0],
            AngularProfile::Tabulated { cos_theta, .. } => cos_theta.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let AngularProfile::Tabulated { cos_theta, values } = self {
            if cos_theta.len() < 2 || cos_theta.len() != values.len() {
                return Err(Error::config("kernel.angular", "table needs ≥ 2 matching (cos_theta, values) entries"));
            }
            if cos_theta.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config("kernel.angular.cos_theta", "must be strictly increasing"));
            }
            if (cos_theta[0] + 1.0).abs() > 1e-12 || (cos_theta[cos_theta.len() - 1] - 1.0).abs() > 1e-12 {
                return Err(Error::config("kernel.angular.cos_theta", "must span [-1, 1]"));
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::config("kernel.angular.values", "must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// |S^{N−2}| ∫₀^π f(cos θ) sin^{N−2} θ dθ, integrated panel-wise in θ.
pub fn sphere_mass(dim: usize, f: impl Fn(f64) -> f64, breaks_cos: &[f64], order: usize) -> Result<f64> {
    let mut thetas: Vec<f64> = breaks_cos.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let rule = Rule::composite(order, &thetas);
    let p = dim as i32 - 2;
    let mut acc = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(t.cos()) * t.sin().powi(p);
        if !v.is_finite() {
            return Err(Error::domain(format!("non-finite angular integrand at θ = {t}")));
        }
        acc += w * v;
    }
    Ok(sphere_area(dim - 1) * acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionKernelSpec {
    pub dimension: usize,
    pub gamma: f64,
    pub c_phi: f64,
    pub angular: AngularProfile,
    /// Multiplier applied to the raw profile (1/ℓ_b of the raw profile when normalized).
    pub scale: f64,
    pub normalized: bool,
    pub c_b: f64,
    pub big_c_b: f64,
}

impl CollisionKernelSpec {
    pub fn new(dimension: usize, gamma: f64, c_phi: f64, angular: AngularProfile, normalize: bool) -> Result<Self> {
        if !(2..=3).contains(&dimension) {
            return Err(Error::config("kernel.dimension", format!("{dimension} not supported (2 or 3)")));
        }
        if !gamma.is_finite() {
            return Err(Error::config("kernel.gamma", "must be finite"));
        }
        if gamma == 0.0 {
            return Err(Error::config("kernel.gamma", "gamma = 0 (Maxwell molecules) is outside the hard-potential regime"));
        }
        if gamma < 0.0 {
            return Err(Error::config("kernel.gamma", format!("gamma = {gamma} < 0 (soft potential) not supported")));
        }
        if gamma > 1.0 {
            return Err(Error::config("kernel.gamma", format!("gamma = {gamma} > 1")));
        }
        if !(c_phi.is_finite() && c_phi > 0.0) {
            return Err(Error::config("kernel.c_phi", "must be positive"));
        }
        angular.validate()?;
        let raw_mass = sphere_mass(dimension, |z| angular.raw(z), &angular.breaks(), 32)?;
        if raw_mass <= 0.0 {
            return Err(Error::config("kernel.angular", "profile is identically zero"));
        }
        let (lo, hi) = match &angular {
            AngularProfile::HardSphere => (1.0, 1.0),
            AngularProfile::Tabulated { values, .. } => (
                values.iter().cloned().fold(f64::INFINITY, f64::min),
                values.iter().cloned().fold(0.0, f64::max),
            ),
        };
        if lo <= 0.0 {
            return Err(Error::config("kernel.angular", "profile must be bounded below by a positive constant"));
        }
        let scale = if normalize { 1.0 / raw_mass } else { 1.0 };
        Ok(CollisionKernelSpec {
            dimension,
            gamma,
            c_phi,
            angular,
            scale,
            normalized: normalize,
            c_b: lo * scale,
            big_c_b: hi * scale,
        })
    }

    /// Normalized hard-sphere-type kernel: b ≡ 1/|S^{N−1}|, C_Φ = 1.
    pub fn hard_sphere(dimension: usize, gamma: f64) -> Result<Self> {
        Self::new(dimension, gamma, 1.0, AngularProfile::HardSphere, true)
    }

    pub fn phi(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::domain(format!("relative speed must be nonnegative, got {z}")));
        }
        Ok(self.phi_unchecked(z))
    }

    #[inline]
    pub fn phi_unchecked(&self, z: f64) -> f64 {
        if self.gamma == 1.0 {
            self.c_phi * z
        } else if z == 0.0 {
            0.0
        } else {
            self.c_phi * z.powf(self.gamma)
        }
    }

    #[inline]
    pub fn b(&self, cos_theta: f64) -> f64 {
        self.scale * self.angular.raw(cos_theta)
    }

    pub fn breaks(&self) -> Vec<f64> {
        self.angular.breaks()
    }
}

/// ℓ_b = |S^{N−2}| ∫₀^π b(cos θ) sin^{N−2} θ dθ.
pub fn ell_b(spec: &CollisionKernelSpec) -> Result<f64> {
    sphere_mass(spec.dimension, |z| spec.b(z), &spec.breaks(), 32)
}

/// ℓ_{b_δ}, with panels aligned to the transition layers of b_δ.
pub fn ell_b_delta(spec: &CollisionKernelSpec, m: &Mollifier) -> Result<f64> {
    let d2 = m.delta * m.delta;
    let mut breaks = spec.breaks();
    breaks.extend([-1.0 + d2, -1.0 + 3.0 * d2, 1.0 - 3.0 * d2, 1.0 - d2]);
    breaks.sort_by(f64::total_cmp);
    sphere_mass(spec.dimension, |z| m.b_delta(spec, z), &breaks, 32)
}

/// Unnormalized bump exp(−1/(1 − x²)) on (−1, 1).
#[inline]
fn bump(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    pub delta: f64,
    /// Gauss order for the 1-D convolutions.
    pub order: usize,
}

impl MollifierConfig {
    pub fn new(delta: f64) -> Self {
        MollifierConfig { delta, order: 64 }
    }
}

/// Evaluator for b_δ and I_δ at a fixed δ.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub delta: f64,
    dim: usize,
    rule: Rule,
    mass_1d: f64,
    mass_radial: f64,
}

impl Mollifier {
    pub fn new(cfg: MollifierConfig, dim: usize) -> Result<Self> {
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            return Err(Error::config("kernel.delta", format!("delta = {} not in (0, 1)", cfg.delta)));
        }
        if cfg.order < 4 {
            return Err(Error::config("kernel.order", "quadrature order must be ≥ 4"));
        }
        let rule = Rule::gauss_legendre(cfg.order);
        let mass_1d = Rule::gauss_on(cfg.order, -1.0, 1.0).integrate(bump);
        let r01 = Rule::gauss_on(cfg.order, 0.0, 1.0);
        let mass_radial = sphere_area(dim) * r01.integrate(|r| r.powi(dim as i32 - 1) * bump(r));
        Ok(Mollifier { delta: cfg.delta, dim, rule, mass_1d, mass_radial })
    }

    /// Mass of the normalized 1-D bump Θ on (−1, x].
    pub fn bump_cdf(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let (c, h) = (0.5 * (x - 1.0), 0.5 * (x + 1.0));
        let s: f64 = self.rule.nodes.iter().zip(&self.rule.weights).map(|(t, w)| w * bump(c + h * t)).sum();
        (h * s / self.mass_1d).clamp(0.0, 1.0)
    }

    /// Normalized radial bump Θ̃ mass (should be 1; exposed for tests).
    pub fn radial_mass(&self) -> f64 {
        let r01 = Rule::gauss_on(self.rule.len(), 0.0, 1.0);
        sphere_area(self.dim) * r01.integrate(|r| r.powi(self.dim as i32 - 1) * bump(r)) / self.mass_radial
    }

    /// (Θ_{δ²} * 1_{[−1+2δ², 1−2δ²]})(z), the smooth angular window.
    pub fn angular_window(&self, z: f64) -> f64 {
        let e = self.delta * self.delta;
        let (a, b) = (-1.0 + 2.0 * e, 1.0 - 2.0 * e);
        if z <= -1.0 + e || z >= 1.0 - e {
            return 0.0;
        }
        if z >= -1.0 + 3.0 * e && z <= 1.0 - 3.0 * e {
            return 1.0;
        }
        (self.bump_cdf((z - a) / e) - self.bump_cdf((z - b) / e)).clamp(0.0, 1.0)
    }

    pub fn b_delta(&self, spec: &CollisionKernelSpec, z: f64) -> f64 {
        self.angular_window(z) * spec.b(z)
    }

    /// I_δ(v) = (Θ̃_δ * 1_{|·| ≤ 1/δ})(v), as a function of |v|.
    pub fn indicator(&self, speed: f64) -> f64 {
        let d = self.delta;
        let r0 = 1.0 / d;
        let r = speed.abs();
        if r <= r0 - d {
            return 1.0;
        }
        if r >= r0 + d {
            return 0.0;
        }
        let kink = ((r0 - r).abs() / d).clamp(0.0, 1.0);
        let n = self.rule.len();
        let area = sphere_area(self.dim);
        let mut acc = 0.0;
        for (lo, hi) in [(0.0, kink), (kink, 1.0)] {
            if hi <= lo {
                continue;
            }
            let rule = Rule::gauss_on(n, lo, hi);
            acc += rule.integrate(|rho| {
                area * rho.powi(self.dim as i32 - 1) * bump(rho) * cap_fraction(self.dim, r, d * rho, r0)
            });
        }
        (acc / self.mass_radial).clamp(0.0, 1.0)
    }
}

/// Fraction of the sphere of radius `s` centred at distance `r` from the origin
/// that lies inside the ball of radius `big_r`.
fn cap_fraction(dim: usize, r: f64, s: f64, big_r: f64) -> f64 {
    if s == 0.0 || r == 0.0 {
        return if r + s <= big_r { 1.0 } else { 0.0 };
    }
    let c = ((big_r * big_r - r * r - s * s) / (2.0 * r * s)).clamp(-1.0, 1.0);
    match dim {
        2 => 1.0 - c.acos() / PI,
        _ => 0.5 * (1.0 + c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        let k = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
        assert_eq!(k.phi(0.0).unwrap(), 0.0);
        assert_eq!(k.phi(2.0).unwrap(), 2.0);
        assert!(k.phi(-1.0).is_err());
        let k = CollisionKernelSpec::new(3, 0.5, 2.0, AngularProfile::HardSphere, true).unwrap();
        assert!((k.phi(4.0).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn ell_b_constant_profiles() {
        let c = 0.3;
        let k = CollisionKernelSpec::new(
            3,
            1.0,
            1.0,
            AngularProfile::Tabulated { cos_theta: vec![-1.0, 1.0], values: vec![c, c] },
            false,
        )
        .unwrap();
        assert!((ell_b(&k).unwrap() - 4.0 * PI * c).abs() < 1e-12);
        let hs = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
        assert!((hs.b(0.2) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((ell_b(&hs).unwrap() - 1.0).abs() < 1e-12);
        let hs2 = CollisionKernelSpec::hard_sphere(2, 0.5).unwrap();
        assert!((hs2.b(0.2) - 1.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn zero_profile_rejected() {
        let e = CollisionKernelSpec::new(
            3,
            1.0,
            1.0,
            AngularProfile::Tabulated { cos_theta: vec![-1.0, 1.0], values: vec![0.0, 0.0] },
            true,
        )
        .unwrap_err();
        assert!(e.to_string().contains("identically zero"));
    }

    #[test]
    fn gamma_range_enforced() {
        assert!(CollisionKernelSpec::hard_sphere(3, 0.0).unwrap_err().to_string().contains("Maxwell"));
        assert!(CollisionKernelSpec::hard_sphere(3, -1.0).is_err());
        assert!(CollisionKernelSpec::hard_sphere(3, 1.5).is_err());
        assert!(CollisionKernelSpec::hard_sphere(4, 1.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn bump_masses() {
        for dim in [2, 3] {
            let m = Mollifier::new(MollifierConfig::new(0.3), dim).unwrap();
            assert!((m.bump_cdf(1.0) - 1.0).abs() < 1e-15);
            assert!((m.bump_cdf(0.0) - 0.5).abs() < 1e-10);
            assert!((m.radial_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn b_delta_examples() {
        let k = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
        let m = Mollifier::new(MollifierConfig::new(0.1), 3).unwrap();
        assert_eq!(m.b_delta(&k, 1.0), 0.0);
        assert_eq!(m.b_delta(&k, -1.0), 0.0);
        assert_eq!(m.b_delta(&k, 0.0), k.b(0.0));
        assert_eq!(m.b_delta(&k, 1.0 - 0.01), 0.0);
        let mid = m.b_delta(&k, 1.0 - 0.02);
        assert!(mid > 0.0 && mid < k.b(0.0));
    }

    #[test]
    fn ell_b_delta_increases_to_ell_b() {
        let k = CollisionKernelSpec::hard_sphere(3, 1.0).unwrap();
        let mut prev = 0.0;
        for d in [0.4, 0.2, 0.1, 0.05] {
            let m = Mollifier::new(MollifierConfig::new(d), 3).unwrap();
            let l = ell_b_delta(&k, &m).unwrap();
            assert!(l > prev && l < 1.0);
            prev = l;
        }
        assert!(1.0 - prev < 0.01);
    }

    #[test]
    fn indicator_examples() {
        let m = Mollifier::new(MollifierConfig::new(0.5), 3).unwrap();
        assert_eq!(m.indicator(0.0), 1.0);
        assert_eq!(m.indicator(2.0 + 1.0), 0.0);
        let mid = m.indicator(2.0);
        assert!(mid > 0.0 && mid < 1.0);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = m.indicator(1.4 + 1.2 * k as f64 / 100.0);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    /// Brute-force 2-D convolution on a fine Cartesian grid.
    #[test]
    fn indicator_matches_brute_force_2d() {
        let delta = 0.5;
        let m = Mollifier::new(MollifierConfig::new(delta), 2).unwrap();
        let n = 801;
        let h = 2.0 * delta / (n - 1) as f64;
        for r in [1.6, 1.8, 2.0, 2.2, 2.4] {
            let (mut num, mut den) = (0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    let (x, y) = (-delta + a as f64 * h, -delta + b as f64 * h);
                    let w = bump(((x * x + y * y).sqrt()) / delta);
                    den += w;
                    let (px, py) = (r - x, -y);
                    if px * px + py * py <= 1.0 / (delta * delta) {
                        num += w;
                    }
                }
            }
            let brute = num / den;
            assert!((m.indicator(r) - brute).abs() < 2e-3, "r={r} {} vs {brute}", m.indicator(r));
        }
    }
}
