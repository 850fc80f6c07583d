//! Log-linear fitting of exponential decay y ≈ C e^{−μ t}.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mu: f64,
    pub c: f64,
    /// RMS residual of log y about the fitted line.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of log y = log C − μ t over the samples with t in `window`
/// (inclusive) and y > 0.
pub fn fit_decay_rate(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::domain("fit: series lengths differ"));
    }
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(&ti, &yi)| ti >= window.0 && ti <= window.1 && yi > 0.0 && yi.is_finite())
        .map(|(&ti, &yi)| (ti, yi.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::domain(format!("fit: {} usable points in window [{}, {}]", pts.len(), window.0, window.1)));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::domain("fit: degenerate time window"));
    }
    let slope = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum::<f64>() / stt;
    let icpt = lm - slope * tm;
    let residual = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { mu: -slope, c: icpt.exp(), residual, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_exponential() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = fit_decay_rate(&t, &y, (1.0, 8.0)).unwrap();
        assert!((f.mu - 0.7).abs() < 1e-12 && (f.c - 3.0).abs() < 1e-10 && f.residual < 1e-12);
        assert_eq!(f.points, 15);
    }

    #[test]
    fn rejects_empty_window() {
        assert!(fit_decay_rate(&[0.0, 1.0], &[1.0, 0.5], (5.0, 6.0)).is_err());
    }
}
