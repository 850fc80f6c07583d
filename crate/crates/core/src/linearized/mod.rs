//! Linearized collision operators L (Gaussian setting, acting on h with
//! f = M(1 + h)) and 𝓛_m (stretched setting, acting on g with f = M + m g)
//! as dense matrices, their three-part decompositions and the mollified gains.

mod assembly;
mod bounds;
mod carleman;

pub use assembly::{assemble_gain, assemble_loss, assemble_psi_parts, conjugate, to_chi, PsiParts};
pub use bounds::*;
pub use carleman::{carleman_path_l_plus_delta, symmetrized_carleman_profile, CarlemanOptions};

use crate::collision::CollisionOperator;
use crate::error::{Error, Result};
use crate::kernels::{Mollifier, MollifierConfig};
use crate::linalg::orthonormalize;
use crate::quadrature::pairwise_sum_by;
use crate::velocity_space::{invariant, n_invariants, VelocityGrid, WeightFunction};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scaling {
    /// h with f = M + M h.
    Maxwellian,
    /// g with f = M + m g, m = exp(−a|v|^s).
    Stretched { a: f64, s: f64 },
}

impl Scaling {
    pub fn weight(&self) -> WeightFunction {
        match *self {
            Scaling::Maxwellian => WeightFunction::Maxwellian,
            Scaling::Stretched { a, s } => WeightFunction::Stretched { a, s },
        }
    }

    /// d_i = √M_i / ω_i, so that the scaled unknown is d ψ.
    pub fn from_psi(&self, grid: &VelocityGrid) -> Vec<f64> {
        let w = self.weight();
        grid.speeds2().iter().map(|&v2| (-0.5 * v2).exp() / w.eval_sq(v2)).collect()
    }
}

/// Dense operator with its parts: A = A⁺ − A* − diag(ν).
#[derive(Debug, Clone)]
pub struct LinearizedOperatorMatrix {
    pub scaling: Scaling,
    pub plus: Mat<f64>,
    pub star: Mat<f64>,
    pub nu: Vec<f64>,
    pub delta: Option<f64>,
}

impl LinearizedOperatorMatrix {
    pub fn from_psi(parts: &PsiParts, grid: &VelocityGrid, scaling: Scaling) -> Self {
        let d = scaling.from_psi(grid);
        LinearizedOperatorMatrix {
            scaling,
            plus: conjugate(&parts.plus, &d),
            star: conjugate(&parts.star, &d),
            nu: parts.nu.clone(),
            delta: parts.delta,
        }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn matrix(&self) -> Mat<f64> {
        let n = self.len();
        Mat::from_fn(n, n, |i, j| self.plus[(i, j)] - self.star[(i, j)] - if i == j { self.nu[i] } else { 0.0 })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let s = pairwise_sum_by(n, |j| (self.plus[(i, j)] - self.star[(i, j)]) * x[j]);
                s - self.nu[i] * x[i]
            })
            .collect()
    }

    /// Writes `<stem>.json` (metadata) and `<stem>.bin` (row-major f64 LE of A).
    pub fn export(&self, stem: &Path, grid: &VelocityGrid) -> Result<()> {
        let a = self.matrix();
        let n = self.len();
        let mut buf = Vec::with_capacity(8 * n * n);
        for i in 0..n {
            for j in 0..n {
                buf.extend_from_slice(&a[(i, j)].to_le_bytes());
            }
        }
        std::fs::File::create(stem.with_extension("bin"))?.write_all(&buf)?;
        let meta = serde_json::json!({
            "rows": n,
            "cols": n,
            "layout": "row_major",
            "dtype": "f64",
            "byte_order": "little",
            "scaling": self.scaling,
            "delta": self.delta,
            "grid": grid.spec(),
            "parts": "A = A_plus - A_star - diag(nu)",
        });
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

/// L in the Gaussian scaling.
pub fn assemble_l(op: &CollisionOperator) -> LinearizedOperatorMatrix {
    LinearizedOperatorMatrix::from_psi(&assemble_psi_parts(op), &op.grid, Scaling::Maxwellian)
}

/// 𝓛_m for an admissible stretched weight.
pub fn assemble_l_m(op: &CollisionOperator, a: f64, s: f64) -> Result<LinearizedOperatorMatrix> {
    WeightFunction::stretched(a, s, op.kernel.gamma)?;
    Ok(LinearizedOperatorMatrix::from_psi(&assemble_psi_parts(op), &op.grid, Scaling::Stretched { a, s }))
}

/// Gain part with b → b_δ and rows multiplied by I_δ, in ψ-coordinates.
pub fn assemble_l_plus_delta_psi(op: &CollisionOperator, delta: f64) -> Result<Mat<f64>> {
    let moll = Mollifier::new(MollifierConfig::new(delta), op.grid.dim)?;
    let kernel = op.kernel.clone();
    let op_d = op.clone().with_angular(|z| moll.b_delta(&kernel, z));
    Ok(assemble_gain(&op_d, Some(&moll)))
}

pub fn assemble_l_plus_delta(op: &CollisionOperator, delta: f64, scaling: Scaling) -> Result<Mat<f64>> {
    let psi = assemble_l_plus_delta_psi(op, delta)?;
    Ok(conjugate(&psi, &scaling.from_psi(&op.grid)))
}

/// Orthonormal basis (Euclidean, χ-coordinates) of the image of the collision
/// invariants: span{√(w_i M_i) φ_a(v_i)}.
pub fn invariant_basis_chi(grid: &VelocityGrid) -> Vec<Vec<f64>> {
    let vs = (0..n_invariants(grid))
        .map(|a| (0..grid.len()).map(|i| (grid.weight(i) * (-grid.speed2(i)).exp()).sqrt() * invariant(grid, a, i)).collect())
        .collect();
    orthonormalize(vs)
}

/// ‖K − Kᵀ‖_F / ‖K‖_F (the L²(M) Hilbert–Schmidt symmetry defect).
pub fn symmetry_defect(k: &Mat<f64>) -> f64 {
    let n = k.nrows();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let d = k[(i, j)] - k[(j, i)];
            num += d * d;
            den += k[(i, j)] * k[(i, j)];
        }
    }
    (num / den).sqrt()
}

pub fn symmetrize(k: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(k.nrows(), k.ncols(), |i, j| 0.5 * (k[(i, j)] + k[(j, i)]))
}

/// P K P with P the orthogonal projector onto the complement of `basis`.
pub fn project_out(k: &Mat<f64>, basis: &[Vec<f64>]) -> Mat<f64> {
    let n = k.nrows();
    let e = Mat::<f64>::from_fn(n, basis.len(), |i, a| basis[a][i]);
    let ke = k * &e;
    let etk = e.transpose() * k;
    let etke = e.transpose() * &ke;
    let mut out = k.clone();
    out -= &e * &etk;
    out -= &ke * e.transpose();
    out += &e * (&etke * e.transpose());
    out
}

pub fn project_vec(x: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let d: f64 = q.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(q).for_each(|(v, e)| *v -= d * e);
    }
}

/// Symmetric, spectral-ready version of L in χ-coordinates.
#[derive(Debug, Clone)]
pub struct SymmetricL {
    /// (K + Kᵀ)/2, unprojected.
    pub sym: Mat<f64>,
    /// P sym P.
    pub projected: Mat<f64>,
    pub defect: f64,
    pub basis: Vec<Vec<f64>>,
}

pub fn symmetric_l(grid: &VelocityGrid, parts: &PsiParts) -> SymmetricL {
    let k = to_chi(grid, &parts.total());
    let defect = symmetry_defect(&k);
    let sym = symmetrize(&k);
    drop(k);
    let basis = invariant_basis_chi(grid);
    let projected = project_out(&sym, &basis);
    SymmetricL { sym, projected, defect, basis }
}

/// Discrete L¹ operator norm with an optional domain weight ρ:
/// max_j Σ_i w_i |A_ij| / (w_j ρ_j).
pub fn l1_operator_norm(a: &Mat<f64>, grid: &VelocityGrid, domain_weight: Option<&[f64]>) -> f64 {
    let w = grid.weights();
    (0..a.ncols())
        .map(|j| {
            let s = pairwise_sum_by(a.nrows(), |i| w[i] * a[(i, j)].abs());
            s / (w[j] * domain_weight.map_or(1.0, |d| d[j]))
        })
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &Mat<f64>) -> Result<f64> {
    let s = a.singular_values().map_err(|e| Error::numerical(format!("svd failed: {e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub max_relative_defect: f64,
    pub samples: usize,
}

/// ‖𝓛_m g − m⁻¹M L(m M⁻¹ g)‖₁ / ‖g‖₁ over the given samples.
pub fn conjugation_defect(
    grid: &VelocityGrid,
    l: &LinearizedOperatorMatrix,
    l_m: &LinearizedOperatorMatrix,
    samples: &[Vec<f64>],
) -> ConjugationReport {
    let m = l_m.scaling.weight();
    let ratio: Vec<f64> = grid.speeds2().iter().map(|&v2| m.eval_sq(v2) / (-v2).exp()).collect();
    let mut worst: f64 = 0.0;
    for g in samples {
        let lhs = l_m.apply(g);
        let h: Vec<f64> = g.iter().zip(&ratio).map(|(a, r)| a * r).collect();
        let rhs: Vec<f64> = l.apply(&h).iter().zip(&ratio).map(|(a, r)| a / r).collect();
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let den = crate::velocity_space::l1(grid, g);
        if den > 0.0 {
            worst = worst.max(crate::velocity_space::l1(grid, &diff) / den);
        }
    }
    ConjugationReport { max_relative_defect: worst, samples: samples.len() }
}

/// Quadratic form ⟨h, A h⟩_{L²(M)} = Σ w M h (A h).
pub fn dirichlet_form(grid: &VelocityGrid, l: &LinearizedOperatorMatrix, h: &[f64]) -> f64 {
    let ah = l.apply(h);
    let w = grid.weights();
    pairwise_sum_by(grid.len(), |i| w[i] * (-grid.speed2(i)).exp() * h[i] * ah[i])
}
