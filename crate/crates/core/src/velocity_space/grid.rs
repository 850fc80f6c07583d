use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Identity of a grid; fields carry it so mismatches are detectable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Per-axis 3-point Lagrange (third order).
    #[default]
    Quadratic,
    /// Per-axis 2-point (multilinear, second order).
    Linear,
}

impl Interpolation {
    pub fn order(self) -> u32 {
        match self {
            Interpolation::Quadratic => 3,
            Interpolation::Linear => 2,
        }
    }
}

/// Truncated Cartesian velocity grid [−R, R]^N with n (odd) nodes per axis and
/// product trapezoid weights.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub h: f64,
    pub axis: Vec<f64>,
    coords: Vec<f64>,
    weights: Vec<f64>,
    speed2: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::config("grid.dimension", format!("{dim} not supported (2 or 3)")));
        }
        if n < 5 || n % 2 == 0 {
            return Err(Error::config("grid.points_per_axis", format!("{n} must be odd and ≥ 5")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::config("grid.extent", "must be positive"));
        }
        let h = 2.0 * extent / (n - 1) as f64;
        // Symmetric construction so that v ↦ −v maps nodes to nodes exactly.
        let half = (n - 1) / 2;
        let axis: Vec<f64> = (0..n).map(|k| (k as f64 - half as f64) * h).collect();
        let axis_w: Vec<f64> = (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h }).collect();
        let total = n.pow(dim as u32);
        let mut coords = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut speed2 = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            let mut s = 0.0;
            for &k in &idx {
                coords.push(axis[k]);
                w *= axis_w[k];
                s += axis[k] * axis[k];
            }
            weights.push(w);
            speed2.push(s);
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(VelocityGrid { dim, n, extent, h, axis, coords, weights, speed2 })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { dim: self.dim, n: self.n, extent: self.extent }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// |v_i|².
    #[inline]
    pub fn speed2(&self, i: usize) -> f64 {
        self.speed2[i]
    }

    pub fn speeds2(&self) -> &[f64] {
        &self.speed2
    }

    /// Index of the node −v_i.
    pub fn mirror(&self, i: usize) -> usize {
        let mut j = 0;
        let mut rest = i;
        let mut stride = self.n.pow(self.dim as u32 - 1);
        for _ in 0..self.dim {
            let k = rest / stride;
            rest %= stride;
            j += (self.n - 1 - k) * stride;
            stride = (stride / self.n).max(1);
        }
        j
    }

    /// Max-norm of v_i relative to the box half-width.
    pub fn box_fraction(&self, i: usize) -> f64 {
        self.node(i).iter().fold(0.0f64, |m, x| m.max(x.abs())) / self.extent
    }

    /// Stencil for off-grid evaluation at `x`; `None` outside the box.
    #[inline]
    pub fn stencil(&self, x: &[f64], scheme: Interpolation) -> Option<Stencil> {
        let mut st = Stencil { base: 0, w: [[0.0; 3]; 3] };
        let r = self.extent * (1.0 + 1e-12);
        let inv_h = 1.0 / self.h;
        let mut stride = 1;
        for d in (0..self.dim).rev() {
            let xd = x[d];
            if xd.abs() > r {
                return None;
            }
            let lo = match scheme {
                Interpolation::Quadratic => {
                    // Centred at the origin so that the stencil choice is odd under v → −v.
                    let uc = xd * inv_h;
                    let m = (self.n / 2) as isize;
                    let k = (uc.round() as isize).clamp(1 - m, m - 1);
                    let c = (m + k) as usize;
                    let t = uc - k as f64;
                    st.w[d] = [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)];
                    c - 1
                }
                Interpolation::Linear => {
                    let u = (xd + self.extent) * inv_h;
                    let c = (u.floor() as isize).clamp(0, self.n as isize - 2) as usize;
                    let t = u - c as f64;
                    if c == 0 {
                        st.w[d] = [1.0 - t, t, 0.0];
                        0
                    } else {
                        st.w[d] = [0.0, 1.0 - t, t];
                        c - 1
                    }
                }
            };
            st.base += lo * stride;
            stride *= self.n;
        }
        Some(st)
    }

    /// Interpolated value of node data at `x` (zero outside the box).
    pub fn interpolate(&self, values: &[f64], x: &[f64], scheme: Interpolation) -> f64 {
        match self.stencil(x, scheme) {
            Some(st) => st.eval(values, self.n, self.dim),
            None => 0.0,
        }
    }
}

/// Tensor-product 3-point stencil: `base` is the flat index of the lowest
/// corner, `w[d]` the weights along axis d.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub base: usize,
    pub w: [[f64; 3]; 3],
}

impl Stencil {
    #[inline]
    pub fn eval(&self, values: &[f64], n: usize, dim: usize) -> f64 {
        let w = &self.w;
        if dim == 2 {
            let mut acc = 0.0;
            for a in 0..3 {
                let row = self.base + a * n;
                acc += w[0][a] * (w[1][0] * values[row] + w[1][1] * values[row + 1] + w[1][2] * values[row + 2]);
            }
            acc
        } else {
            let nn = n * n;
            let mut acc = 0.0;
            for a in 0..3 {
                let mut inner = 0.0;
                for b in 0..3 {
                    let row = self.base + a * nn + b * n;
                    inner += w[1][b] * (w[2][0] * values[row] + w[2][1] * values[row + 1] + w[2][2] * values[row + 2]);
                }
                acc += w[0][a] * inner;
            }
            acc
        }
    }

    /// out[stencil nodes] += c · weights.
    #[inline]
    pub fn scatter(&self, c: f64, out: &mut [f64], n: usize, dim: usize) {
        let w = &self.w;
        if dim == 2 {
            for a in 0..3 {
                let ca = c * w[0][a];
                let row = self.base + a * n;
                out[row] += ca * w[1][0];
                out[row + 1] += ca * w[1][1];
                out[row + 2] += ca * w[1][2];
            }
        } else {
            let nn = n * n;
            for a in 0..3 {
                for b in 0..3 {
                    let cab = c * w[0][a] * w[1][b];
                    let row = self.base + a * nn + b * n;
                    out[row] += cab * w[2][0];
                    out[row + 1] += cab * w[2][1];
                    out[row + 2] += cab * w[2][2];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_box_volume() {
        for (dim, n, r) in [(2, 21, 5.0), (3, 11, 4.5)] {
            let g = VelocityGrid::new(dim, n, r).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - (2.0 * r as f64).powi(dim as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn nodes_symmetric() {
        let g = VelocityGrid::new(3, 7, 2.0).unwrap();
        for i in 0..g.len() {
            let j = g.mirror(i);
            for d in 0..3 {
                assert_eq!(g.node(i)[d], -g.node(j)[d]);
            }
        }
        let center = g.len() / 2;
        assert!(g.node(center).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(VelocityGrid::new(3, 10, 4.0).is_err());
        assert!(VelocityGrid::new(1, 11, 4.0).is_err());
        assert!(VelocityGrid::new(2, 11, -1.0).is_err());
    }

    #[test]
    fn quadratic_interpolation_exact_on_quadratics() {
        let g = VelocityGrid::new(3, 9, 2.0).unwrap();
        let f = |v: &[f64]| 1.0 + v[0] - 2.0 * v[1] * v[2] + 0.5 * v[2] * v[2] + v[0] * v[1];
        let vals: Vec<f64> = (0..g.len()).map(|i| f(g.node(i))).collect();
        for x in [[0.13, -0.71, 1.9], [-1.99, 0.0, 0.33], [1.2, 1.2, -1.2]] {
            let got = g.interpolate(&vals, &x, Interpolation::Quadratic);
            assert!((got - f(&x)).abs() < 1e-12, "{got} vs {}", f(&x));
        }
        assert_eq!(g.interpolate(&vals, &[2.1, 0.0, 0.0], Interpolation::Quadratic), 0.0);
    }

    #[test]
    fn linear_interpolation_exact_on_multilinear() {
        let g = VelocityGrid::new(2, 9, 2.0).unwrap();
        let f = |v: &[f64]| 1.0 + v[0] - 2.0 * v[1] + 3.0 * v[0] * v[1];
        let vals: Vec<f64> = (0..g.len()).map(|i| f(g.node(i))).collect();
        for x in [[0.13, -0.71], [-1.99, 0.0], [1.999, 1.2]] {
            let got = g.interpolate(&vals, &x, Interpolation::Linear);
            assert!((got - f(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn scatter_is_adjoint_of_eval() {
        let g = VelocityGrid::new(2, 9, 2.0).unwrap();
        let st = g.stencil(&[0.37, -1.1], Interpolation::Quadratic).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut out = vec![0.0; g.len()];
        st.scatter(1.0, &mut out, g.n, 2);
        let dot: f64 = out.iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((dot - st.eval(&vals, g.n, 2)).abs() < 1e-14);
    }
}
