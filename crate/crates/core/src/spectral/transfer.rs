use super::{ModeClass, SymmetricSpectrum};
use crate::error::{Error, Result};
use crate::linearized::Scaling;
use crate::velocity_space::{l1, VelocityGrid};
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

/// Parlett–Reinsch balancing with radix 2: returns (D⁻¹ A D, diag D).
pub fn balance(a: &Mat<f64>) -> (Mat<f64>, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    for _sweep in 0..100 {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    (b, d)
}

/// Eigenvalues of a general real matrix (balanced first), sorted by real part, descending.
pub fn general_eigenvalues(a: &Mat<f64>) -> Result<Vec<c64>> {
    let (b, _) = balance(a);
    let mut ev = b.eigenvalues().map_err(|e| Error::numerical(format!("eigensolver failed: {e:?}")))?;
    ev.sort_by(|x, y| y.re.total_cmp(&x.re));
    Ok(ev)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferRow {
    pub eigenvalue: f64,
    pub class: ModeClass,
    /// ‖𝓛_m(m⁻¹Mφ) − λ m⁻¹Mφ‖₁ / ‖m⁻¹Mφ‖₁.
    pub residual: f64,
    pub matched: f64,
    pub matched_imag: f64,
    /// |λ − λ_m| / max(|λ|, gap).
    pub match_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    pub a: f64,
    pub s: f64,
    pub band_onset: Option<f64>,
    pub rows: Vec<TransferRow>,
    pub max_residual: f64,
    pub max_match_error: f64,
    /// 𝓛_m eigenvalues above the onset with no L eigenvalue within tolerance.
    pub unmatched: Vec<f64>,
    pub max_imag_above_onset: f64,
    pub pass: bool,
}

/// `l_m` is 𝓛_m acting on g (f = M + m g) and `lm_eigs` its eigenvalues;
/// the L eigenpairs come from the symmetrized spectrum.
pub fn eigenvector_transfer_check(
    grid: &VelocityGrid,
    spec: &SymmetricSpectrum,
    l_m: &Mat<f64>,
    lm_eigs: &[c64],
    scaling: Scaling,
    eps_transfer: f64,
    eps_match: f64,
) -> Result<TransferReport> {
    let (a, s) = match scaling {
        Scaling::Stretched { a, s } => (a, s),
        Scaling::Maxwellian => return Err(Error::domain("transfer check needs a stretched weight")),
    };
    let n = grid.len();
    let d = scaling.from_psi(grid);
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let onset = spec.band_onset();
    let gap = spec.gap();
    let scale = |lam: f64| lam.abs().max(gap);
    let mut rows = Vec::new();
    for k in 0..spec.values.len() {
        let lam = spec.values[k];
        if spec.class[k] == ModeClass::Band || onset.is_some_and(|o| lam <= o) {
            continue;
        }
        let g: Vec<f64> = (0..n).map(|i| d[i] * spec.vectors[(i, k)] / sw[i]).collect();
        let lg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| l_m[(i, j)] * g[j]).sum::<f64>() - lam * g[i]).collect();
        let residual = l1(grid, &lg) / l1(grid, &g);
        let best = lm_eigs
            .iter()
            .min_by(|x, y| (**x - c64::new(lam, 0.0)).norm().total_cmp(&(**y - c64::new(lam, 0.0)).norm()))
            .copied()
            .unwrap_or(c64::new(f64::NAN, f64::NAN));
        let match_error = (best - c64::new(lam, 0.0)).norm() / scale(lam);
        rows.push(TransferRow {
            eigenvalue: lam,
            class: spec.class[k],
            residual,
            matched: best.re,
            matched_imag: best.im,
            match_error,
        });
    }
    let mut unmatched = Vec::new();
    let mut max_imag: f64 = 0.0;
    for z in lm_eigs {
        if onset.is_some_and(|o| z.re <= o) {
            continue;
        }
        max_imag = max_imag.max(z.im.abs());
        let near = spec.values.iter().any(|&l| (z - c64::new(l, 0.0)).norm() <= eps_match * scale(l));
        if !near {
            unmatched.push(z.re);
        }
    }
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_match_error = rows.iter().map(|r| r.match_error).fold(0.0, f64::max);
    let pass = !rows.is_empty() && max_residual <= eps_transfer && max_match_error <= eps_match && unmatched.is_empty();
    Ok(TransferReport { a, s, band_onset: onset, rows, max_residual, max_match_error, unmatched, max_imag_above_onset: max_imag, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balancing_preserves_eigenvalues() {
        let a = Mat::<f64>::from_fn(3, 3, |i, j| [[1.0, 1e6, 0.0], [1e-6, 2.0, 1e4], [0.0, 1e-4, 3.0]][i][j]);
        let (b, d) = balance(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert!((b[(i, j)] - a[(i, j)] * d[j] / d[i]).abs() <= 1e-12 * a[(i, j)].abs());
            }
        }
        let ea = general_eigenvalues(&a).unwrap();
        let tr: f64 = ea.iter().map(|z| z.re).sum();
        assert!((tr - 6.0).abs() < 1e-9);
    }
}
