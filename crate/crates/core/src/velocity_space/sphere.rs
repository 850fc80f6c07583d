use crate::error::{Error, Result};
use crate::kernels::sphere_area;
use crate::quadrature::Rule;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereRule {
    /// N=2: equispaced circle.
    Circle { points: usize },
    /// N=3: Gauss in cos θ × trapezoid in φ.
    GaussProduct { n_theta: usize, n_phi: usize },
    /// Composite Gauss in θ with panels refined geometrically towards θ = 0
    /// and θ = π (resolves narrow angular windows); trapezoid in φ for N=3.
    Graded { first_panel: f64, order: usize, n_phi: usize },
}

/// Directions on S^{N−1} expressed in a reference frame whose pole (last
/// axis) is aligned, at use time, with the relative velocity. The last
/// coordinate of each direction is therefore cos θ.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub rule: SphereRule,
    dirs: Vec<f64>,
    weights: Vec<f64>,
    antipode: Option<Vec<usize>>,
}

impl SphereQuadrature {
    pub fn new(dim: usize, rule: SphereRule) -> Result<Self> {
        let (dirs, weights) = match (&rule, dim) {
            (SphereRule::Circle { points }, 2) => {
                if *points < 4 {
                    return Err(Error::config("sphere.points", "need ≥ 4 points"));
                }
                let w = 2.0 * PI / *points as f64;
                let mut d = Vec::new();
                for k in 0..*points {
                    let t = w * k as f64;
                    d.extend([t.sin(), t.cos()]);
                }
                (d, vec![w; *points])
            }
            (SphereRule::GaussProduct { n_theta, n_phi }, 3) => {
                if *n_theta < 2 || *n_phi < 2 {
                    return Err(Error::config("sphere", "orders must be ≥ 2"));
                }
                let g = Rule::gauss_legendre(*n_theta);
                product3(&g.nodes, &g.weights, *n_phi)
            }
            (SphereRule::Graded { first_panel, order, n_phi }, _) => {
                if !(*first_panel > 0.0 && *first_panel < 0.5) || *order < 2 {
                    return Err(Error::config("sphere", "graded rule needs 0 < first_panel < 0.5 and order ≥ 2"));
                }
                let mut breaks = vec![0.0];
                let mut t = *first_panel;
                while t < PI / 2.0 {
                    breaks.push(t);
                    t *= 2.0;
                }
                breaks.push(PI / 2.0);
                let upper: Vec<f64> = breaks.iter().rev().skip(1).map(|b| PI - b).collect();
                breaks.extend(upper);
                let r = Rule::composite(*order, &breaks);
                if dim == 2 {
                    let mut d = Vec::new();
                    let mut w = Vec::new();
                    // θ ∈ [0, π] and its mirror θ ↦ 2π − θ.
                    for (&t, &wt) in r.nodes.iter().zip(&r.weights) {
                        d.extend([t.sin(), t.cos()]);
                        w.push(wt);
                    }
                    for (&t, &wt) in r.nodes.iter().zip(&r.weights).rev() {
                        let t = 2.0 * PI - t;
                        d.extend([t.sin(), t.cos()]);
                        w.push(wt);
                    }
                    (d, w)
                } else {
                    if *n_phi < 2 {
                        return Err(Error::config("sphere.n_phi", "must be ≥ 2"));
                    }
                    let c: Vec<f64> = r.nodes.iter().map(|t| t.cos()).collect();
                    let w: Vec<f64> = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * t.sin()).collect();
                    product3(&c, &w, *n_phi)
                }
            }
            _ => return Err(Error::config("sphere", format!("rule {rule:?} not available for N = {dim}"))),
        };
        let mut q = SphereQuadrature { dim, rule, dirs, weights, antipode: None };
        q.antipode = q.find_antipodes();
        // Make antipodal nodes exact negatives so that σ ↦ −σ swaps v' and v'_*
        // bit for bit (stencil selection then agrees on both sides).
        if let Some(a) = q.antipode.clone() {
            let d = q.dim;
            for k in 0..a.len() {
                if k < a[k] {
                    for c in 0..d {
                        q.dirs[a[k] * d + c] = -q.dirs[k * d + c];
                    }
                }
            }
        }
        Ok(q)
    }

    /// Default rule: 32-point circle (N=2), 16 × 32 Gauss product (N=3).
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::new(2, SphereRule::Circle { points: 32 }),
            _ => Self::new(dim, SphereRule::GaussProduct { n_theta: 16, n_phi: 32 }),
        }
    }

    fn find_antipodes(&self) -> Option<Vec<usize>> {
        let m = self.len();
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let dk = self.dir(k);
            let j = (0..m).find(|&j| {
                (self.weights[j] - self.weights[k]).abs() <= 1e-12 * self.weights[k]
                    && self.dir(j).iter().zip(dk).all(|(a, b)| (a + b).abs() < 1e-10)
            })?;
            out.push(j);
        }
        Some(out)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn dir(&self, k: usize) -> &[f64] {
        &self.dirs[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn cos_theta(&self, k: usize) -> f64 {
        self.dirs[k * self.dim + self.dim - 1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of −σ_k when the rule is antipodally symmetric.
    pub fn antipodes(&self) -> Option<&[usize]> {
        self.antipode.as_deref()
    }

    /// Indices of one representative per antipodal pair, if the rule is symmetric.
    pub fn hemisphere(&self) -> Option<Vec<usize>> {
        let a = self.antipode.as_ref()?;
        Some((0..self.len()).filter(|&k| k < a[k]).collect())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn expected_area(&self) -> f64 {
        sphere_area(self.dim)
    }
}

fn product3(c: &[f64], wc: &[f64], n_phi: usize) -> (Vec<f64>, Vec<f64>) {
    let dphi = 2.0 * PI / n_phi as f64;
    let mut d = Vec::new();
    let mut w = Vec::new();
    for (&ci, &wi) in c.iter().zip(wc) {
        let si = (1.0 - ci * ci).max(0.0).sqrt();
        for j in 0..n_phi {
            let p = dphi * j as f64;
            d.extend([si * p.cos(), si * p.sin(), ci]);
            w.push(wi * dphi);
        }
    }
    (d, w)
}

/// Orthonormal frame with `k` (unit) as last axis; writes σ = Σ σ_ref[a] e_a.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    e: [[f64; 3]; 3],
    dim: usize,
}

impl Frame {
    #[inline]
    pub fn new(k: &[f64]) -> Frame {
        if k.len() == 2 {
            Frame { e: [[-k[1], k[0], 0.0], [k[0], k[1], 0.0], [0.0; 3]], dim: 2 }
        } else {
            // Duff et al., "Building an orthonormal basis, revisited" (2017).
            let (x, y, z) = (k[0], k[1], k[2]);
            let sign = 1.0f64.copysign(z);
            let a = -1.0 / (sign + z);
            let b = x * y * a;
            Frame {
                e: [[1.0 + sign * x * x * a, sign * b, -sign * x], [b, sign + y * y * a, -y], [x, y, z]],
                dim: 3,
            }
        }
    }

    #[inline]
    pub fn apply(&self, s: &[f64], out: &mut [f64]) {
        if self.dim == 2 {
            out[0] = s[0] * self.e[0][0] + s[1] * self.e[1][0];
            out[1] = s[0] * self.e[0][1] + s[1] * self.e[1][1];
        } else {
            for d in 0..3 {
                out[d] = s[0] * self.e[0][d] + s[1] * self.e[1][d] + s[2] * self.e[2][d];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(q: &SphereQuadrature) {
        assert!((q.total_weight() - q.expected_area()).abs() < 1e-12 * q.expected_area());
        for d in 0..q.dim {
            let s: f64 = (0..q.len()).map(|k| q.weights()[k] * q.dir(k)[d]).sum();
            assert!(s.abs() < 1e-12);
        }
        for k in 0..q.len() {
            let n: f64 = q.dir(k).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!(q.antipodes().is_some());
    }

    #[test]
    fn default_rules_valid() {
        check(&SphereQuadrature::default_for(2).unwrap());
        check(&SphereQuadrature::default_for(3).unwrap());
        check(&SphereQuadrature::new(2, SphereRule::Graded { first_panel: 0.01, order: 6, n_phi: 0 }).unwrap());
        check(&SphereQuadrature::new(3, SphereRule::Graded { first_panel: 0.01, order: 6, n_phi: 16 }).unwrap());
    }

    #[test]
    fn second_moment_of_sphere() {
        // ∫ σ_N² dσ = |S^{N−1}| / N.
        for dim in [2, 3] {
            let q = SphereQuadrature::default_for(dim).unwrap();
            let s: f64 = (0..q.len()).map(|k| q.weights()[k] * q.cos_theta(k).powi(2)).sum();
            assert!((s - q.expected_area() / dim as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_is_orthonormal_with_pole() {
        for k in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.6, 0.0, 0.8], [0.48, -0.6, -0.64]] {
            let f = Frame::new(&k);
            let mut out = [0.0; 3];
            f.apply(&[0.0, 0.0, 1.0], &mut out);
            for d in 0..3 {
                assert!((out[d] - k[d]).abs() < 1e-15);
            }
            for a in 0..3 {
                for b in 0..3 {
                    let dot: f64 = (0..3).map(|d| f.e[a][d] * f.e[b][d]).sum();
                    assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
        let f = Frame::new(&[0.6, 0.8]);
        let mut out = [0.0; 2];
        f.apply(&[0.0, 1.0], &mut out);
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
    }
}
