use crate::collision::{CollisionFrequency, CollisionOperator};
use crate::kernels::Mollifier;
use crate::velocity_space::VelocityGrid;
use faer::Mat;

/// Jacobian of the discrete collision operator at M, split in its three
/// parts, in the coordinates ψ = (f − M)/√M.
#[derive(Debug, Clone)]
pub struct PsiParts {
    pub plus: Mat<f64>,
    pub star: Mat<f64>,
    pub nu: Vec<f64>,
    pub delta: Option<f64>,
}

/// Gain part S⁺ of the Jacobian (rows scaled by I_δ when a mollifier is given;
/// the angular profile of `op` is used as is, so pass an operator built with
/// b_δ for the truncated variant).
pub fn assemble_gain(op: &CollisionOperator, indicator: Option<&Mollifier>) -> Mat<f64> {
    let grid = &op.grid;
    let len = grid.len();
    let (n, dim) = (grid.n, grid.dim);
    let sqrt_m = op.sqrt_maxwellian();
    let angles = op.angular_list(true);
    let mut out = Mat::<f64>::zeros(len, len);
    let mut row = vec![0.0; len];
    for i in 0..len {
        if !op.is_active(i) {
            continue;
        }
        let scale = indicator.map_or(1.0, |m| m.indicator(grid.speed2(i).sqrt()));
        if scale == 0.0 {
            continue;
        }
        row.iter_mut().for_each(|x| *x = 0.0);
        op.for_each_collision(i, &angles, |j, cj, wk, sp, ss| {
            let c = sqrt_m[j] * cj * wk;
            if let Some(sp) = sp {
                if let Some(ss) = ss {
                    let a = ss.eval(sqrt_m, n, dim);
                    let b = sp.eval(sqrt_m, n, dim);
                    sp.scatter(c * a, &mut row, n, dim);
                    ss.scatter(c * b, &mut row, n, dim);
                }
            }
        });
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = scale * v;
        }
    }
    out
}

/// S*_ij = ℓ̂_b √M_i w_j Φ_ij √M_j and ν_i = ℓ̂_b Σ_j w_j Φ_ij M_j.
pub fn assemble_loss(op: &CollisionOperator) -> (Mat<f64>, CollisionFrequency) {
    let grid = &op.grid;
    let len = grid.len();
    let sqrt_m = op.sqrt_maxwellian();
    let ell = op.ell_hat();
    let star = Mat::<f64>::from_fn(len, len, |i, j| {
        if i == j || !op.is_active(i) || !op.is_active(j) {
            return 0.0;
        }
        let r2: f64 = grid.node(i).iter().zip(grid.node(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        ell * sqrt_m[i] * grid.weight(j) * op.kernel.phi_unchecked(r2.sqrt()) * sqrt_m[j]
    });
    (star, op.collision_frequency())
}

pub fn assemble_psi_parts(op: &CollisionOperator) -> PsiParts {
    let plus = assemble_gain(op, None);
    let (star, freq) = assemble_loss(op);
    PsiParts { plus, star, nu: freq.nu, delta: None }
}

impl PsiParts {
    /// S = S⁺ − S* − diag(ν).
    pub fn total(&self) -> Mat<f64> {
        let n = self.nu.len();
        Mat::from_fn(n, n, |i, j| self.plus[(i, j)] - self.star[(i, j)] - if i == j { self.nu[i] } else { 0.0 })
    }
}

/// K = W^{1/2} S W^{−1/2}: the operator in coordinates χ = √w ψ, where the
/// discrete L²(M) inner product becomes the Euclidean one.
pub fn to_chi(grid: &VelocityGrid, s: &Mat<f64>) -> Mat<f64> {
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    Mat::from_fn(s.nrows(), s.ncols(), |i, j| sw[i] * s[(i, j)] / sw[j])
}

/// diag(d) A diag(1/d).
pub fn conjugate(a: &Mat<f64>, d: &[f64]) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| d[i] * a[(i, j)] / d[j])
}
