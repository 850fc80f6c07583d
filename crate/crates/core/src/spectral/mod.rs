//! Eigenstructure of the assembled operators: null space, gap, band-onset
//! surrogate for the essential spectrum, transfer between L and 𝓛_m,
//! semigroup decay and resolvent scans.

mod expm;
mod profile;
mod resolvent;
mod semigroup;
mod transfer;

pub use expm::expm;
pub use profile::{asymptotic_profile, ProfileReport};
pub use resolvent::{resolvent_scan, sector_points, EnvelopeFit, ResolventReport, ResolventRow};
pub use semigroup::{semigroup_decay, SemigroupReport, SemigroupRow};
pub use transfer::{balance, eigenvector_transfer_check, general_eigenvalues, TransferReport, TransferRow};

use crate::error::{Error, Result};
use crate::kernels::CollisionKernelSpec;
use crate::linearized::SymmetricL;
use crate::velocity_space::VelocityGrid;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// c_b C_Φ (γ/8)^{γ/2} e^{−γ/2} π / 24.
pub fn explicit_gap_lower_bound(kernel: &CollisionKernelSpec) -> f64 {
    gap_bound_formula(kernel.c_b, kernel.c_phi, kernel.gamma)
}

pub fn gap_bound_formula(c_b: f64, c_phi: f64, gamma: f64) -> f64 {
    c_b * c_phi * (gamma / 8.0).powf(gamma / 2.0) * (-gamma / 2.0).exp() * std::f64::consts::PI / 24.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    /// Collision invariant (projected out).
    Null,
    Discrete,
    /// Localized at the box boundary: discrete shadow of the essential spectrum.
    Band,
}

impl ModeClass {
    pub fn label(self) -> &'static str {
        match self {
            ModeClass::Null => "null",
            ModeClass::Discrete => "discrete",
            ModeClass::Band => "band",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// |λ| ≤ tol_null defines the raw null cluster; `None` = 5·10⁻² · gap.
    pub tol_null: Option<f64>,
    /// Outer shell |v|_∞ ≥ shell · R.
    pub shell: f64,
    /// Fraction of the L²(M) energy in the shell that classifies a mode as band.
    pub shell_mass: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { tol_null: None, shell: 0.8, shell_mass: 0.5 }
    }
}

/// Full eigendecomposition of the symmetrized, projected L in χ-coordinates.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors (columns, same order).
    pub vectors: Mat<f64>,
    pub class: Vec<ModeClass>,
    pub shell_fraction: Vec<f64>,
}

impl SymmetricSpectrum {
    pub fn new(grid: &VelocityGrid, sl: &SymmetricL, opts: &SpectrumOptions) -> Result<Self> {
        let (values, vectors) = sym_eigen(&sl.projected)?;
        let n = values.len();
        let in_shell: Vec<bool> = (0..grid.len()).map(|i| grid.box_fraction(i) >= opts.shell).collect();
        let mut class = Vec::with_capacity(n);
        let mut shell_fraction = Vec::with_capacity(n);
        for k in 0..n {
            let overlap: f64 = sl
                .basis
                .iter()
                .map(|b| {
                    let d: f64 = (0..grid.len()).map(|i| b[i] * vectors[(i, k)]).sum();
                    d * d
                })
                .sum();
            let sh: f64 = (0..grid.len()).filter(|&i| in_shell[i]).map(|i| vectors[(i, k)].powi(2)).sum();
            shell_fraction.push(sh);
            class.push(if overlap > 0.5 {
                ModeClass::Null
            } else if sh > opts.shell_mass {
                ModeClass::Band
            } else {
                ModeClass::Discrete
            });
        }
        Ok(SymmetricSpectrum { values, vectors, class, shell_fraction })
    }

    /// λ = −max{μ : μ not a collision invariant}.
    pub fn gap(&self) -> f64 {
        -self.first_nonnull().map_or(f64::NEG_INFINITY, |k| self.values[k])
    }

    fn first_nonnull(&self) -> Option<usize> {
        (0..self.values.len()).find(|&k| self.class[k] != ModeClass::Null)
    }

    /// Second distinct non-null eigenvalue (relative separation > `tol`).
    pub fn lambda2(&self, tol: f64) -> Option<f64> {
        let lam = self.gap();
        self.values
            .iter()
            .zip(&self.class)
            .filter(|(_, c)| **c != ModeClass::Null)
            .map(|(v, _)| -v)
            .find(|&l| l > lam * (1.0 + tol))
    }

    /// Largest eigenvalue whose mode is boundary-localized.
    pub fn band_onset(&self) -> Option<f64> {
        (0..self.values.len()).find(|&k| self.class[k] == ModeClass::Band).map(|k| self.values[k])
    }

    /// Indices of the eigenvalues of the gap cluster (within relative `tol` of −λ).
    pub fn gap_cluster(&self, tol: f64) -> Vec<usize> {
        let lam = self.gap();
        (0..self.values.len())
            .filter(|&k| self.class[k] != ModeClass::Null && (self.values[k] + lam).abs() <= tol * lam)
            .collect()
    }

    pub fn write_ladder_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "re,im,classification")?;
        for (v, c) in self.values.iter().zip(&self.class) {
            writeln!(w, "{:.12e},0,{}", v, c.label())?;
        }
        Ok(())
    }
}

/// Symmetric eigendecomposition, eigenvalues in descending order.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::numerical(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = s.nrows();
    let values: Vec<f64> = (0..n).rev().map(|k| s[k]).collect();
    let vectors = Mat::from_fn(u.nrows(), n, |i, k| u[(i, n - 1 - k)]);
    Ok((values, vectors))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumFlags {
    pub gap_positive: bool,
    pub gap_below_nu0: bool,
    pub null_cluster_size_ok: bool,
    pub rest_below_half_gap: bool,
    pub principal_angles_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dimension: usize,
    pub n: usize,
    pub extent: f64,
    /// Leading eigenvalues of the projected operator (descending, invariants excluded).
    pub top_eigenvalues: Vec<f64>,
    pub gap: f64,
    pub lambda2: Option<f64>,
    pub gap_multiplicity: usize,
    pub nu0: f64,
    pub band_onset: Option<f64>,
    /// Bound evaluated with the kernel's own c_b, C_Φ, γ.
    pub lower_bound_explicit: f64,
    /// Bound with c_b = C_Φ = 1.
    pub lower_bound_unit: f64,
    pub symmetry_defect: f64,
    /// Raw (unprojected) symmetrized operator.
    pub tol_null: f64,
    pub raw_null_cluster: Vec<f64>,
    pub raw_max_outside_cluster: f64,
    pub principal_angles_deg: Vec<f64>,
    pub flags: SpectrumFlags,
}

/// Full report: projected spectrum for the gap, raw symmetrized spectrum for
/// the null cluster and its principal angles against {1, v, |v|²}.
pub fn eigendecompose(
    grid: &VelocityGrid,
    kernel: &CollisionKernelSpec,
    sl: &SymmetricL,
    nu: &[f64],
    opts: &SpectrumOptions,
) -> Result<(SpectrumReport, SymmetricSpectrum)> {
    let spec = SymmetricSpectrum::new(grid, sl, opts)?;
    let gap = spec.gap();
    let nu0 = nu.iter().copied().fold(f64::INFINITY, f64::min);
    let tol_null = opts.tol_null.unwrap_or(5e-2 * gap.abs());

    let (raw, raw_vecs) = sym_eigen(&sl.sym)?;
    let cluster: Vec<usize> = (0..raw.len()).filter(|&k| raw[k].abs() <= tol_null).collect();
    let raw_max_outside = (0..raw.len()).filter(|k| !cluster.contains(k)).map(|k| raw[k]).fold(f64::NEG_INFINITY, f64::max);
    let angles = principal_angles_deg(&sl.basis, &raw_vecs, &cluster);

    let n_inv = sl.basis.len();
    let top: Vec<f64> = spec.values.iter().zip(&spec.class).filter(|(_, c)| **c != ModeClass::Null).map(|(v, _)| *v).take(40).collect();
    let flags = SpectrumFlags {
        gap_positive: gap > 0.0,
        gap_below_nu0: gap < nu0,
        null_cluster_size_ok: cluster.len() == n_inv,
        rest_below_half_gap: raw_max_outside <= -gap / 2.0,
        principal_angles_ok: angles.len() == n_inv && angles.iter().all(|&a| a <= 2.0),
    };
    let report = SpectrumReport {
        dimension: grid.dim,
        n: grid.n,
        extent: grid.extent,
        top_eigenvalues: top,
        gap,
        lambda2: spec.lambda2(1e-3),
        gap_multiplicity: spec.gap_cluster(1e-3).len(),
        nu0,
        band_onset: spec.band_onset(),
        lower_bound_explicit: explicit_gap_lower_bound(kernel),
        lower_bound_unit: gap_bound_formula(1.0, 1.0, kernel.gamma),
        symmetry_defect: sl.defect,
        tol_null,
        raw_null_cluster: cluster.iter().map(|&k| raw[k]).collect(),
        raw_max_outside_cluster: raw_max_outside,
        principal_angles_deg: angles,
        flags,
    };
    Ok((report, spec))
}

/// Principal angles (degrees, ascending) between span(basis) (orthonormal) and
/// the span of the selected columns of `vecs` (orthonormal). Empty if the
/// dimensions differ.
pub fn principal_angles_deg(basis: &[Vec<f64>], vecs: &Mat<f64>, cols: &[usize]) -> Vec<f64> {
    if cols.len() != basis.len() || cols.is_empty() {
        return Vec::new();
    }
    let c = Mat::<f64>::from_fn(basis.len(), cols.len(), |a, b| (0..vecs.nrows()).map(|i| basis[a][i] * vecs[(i, cols[b])]).sum());
    let s = match c.singular_values() {
        Ok(s) => s,
        Err(_) => return Vec::new(),
    };
    let mut out: Vec<f64> = s.iter().map(|&x| x.clamp(-1.0, 1.0).acos().to_degrees()).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_bound_arithmetic() {
        // π/(48√(2e)) for hard spheres with unit constants.
        let v = gap_bound_formula(1.0, 1.0, 1.0);
        let direct = std::f64::consts::PI / (48.0 * (2.0 * std::f64::consts::E).sqrt());
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.0281).abs() < 5e-5);
        assert!((gap_bound_formula(2.0, 3.0, 1.0) - 6.0 * v).abs() < 1e-15);
        // γ = 1/2: (1/16)^{1/4} e^{−1/4} π/24 = ½ e^{−1/4} π/24.
        let half = 0.5 * (-0.25f64).exp() * std::f64::consts::PI / 24.0;
        assert!((gap_bound_formula(1.0, 1.0, 0.5) - half).abs() < 1e-15);
    }

    #[test]
    fn diagonal_spectrum() {
        let nu = [3.0, 1.0, 2.0];
        let a = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { -nu[i] } else { 0.0 });
        let (v, _) = sym_eigen(&a).unwrap();
        assert_eq!(v, vec![-1.0, -2.0, -3.0]);
    }
}
