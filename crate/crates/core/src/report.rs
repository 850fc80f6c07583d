//! Result persistence: pretty JSON summaries, CSV tables and SVG line plots.
//! Every plot is written together with a CSV twin holding the plotted data.

use crate::error::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Columns of equal length under the given headers.
pub fn write_columns(path: &Path, headers: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    let rows = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| c.get(r).map_or(String::new(), |v| format!("{v:.12e}"))))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Draw markers instead of a polyline.
    pub points: bool,
}

impl Series {
    pub fn line(label: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { label: label.into(), x, y, points: false }
    }

    pub fn scatter(label: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { label: label.into(), x, y, points: true }
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555"];

/// Writes `<stem>.svg` and `<stem>.csv` (long format: series,x,y).
pub fn plot(stem: &Path, title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(stem.with_extension("csv"))?;
    w.write_record(["series", "x", "y"])?;
    for s in series {
        for (x, y) in s.x.iter().zip(&s.y) {
            w.write_record([s.label.clone(), format!("{x:.12e}"), format!("{y:.12e}")])?;
        }
    }
    w.flush()?;
    std::fs::write(stem.with_extension("svg"), svg(title, xlabel, ylabel, series, log_y))?;
    Ok(())
}

fn svg(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let (wd, ht, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 150.0, 40.0, 50.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.x.iter().zip(&s.y).map(|(&x, &y)| (x, y)))
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
        .map(|(x, y)| (x, ty(y)))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |a, p| {
        (a.0.min(p.0), a.1.max(p.0), a.2.min(p.1), a.3.max(p.1))
    });
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (wd - ml - mr);
    let py = |y: f64| ht - mb - (y - y0) / (y1 - y0) * (ht - mt - mb);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{wd}" height="{ht}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>"#, (wd - mr + ml) / 2.0, esc(title));
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        wd - ml - mr,
        ht - mt - mb
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let ylab = if log_y { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#, px(fx), ht - mb + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#, ml - 6.0, py(fy) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (wd - mr + ml) / 2.0, ht - 10.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (ht - mb + mt) / 2.0,
        (ht - mb + mt) / 2.0,
        esc(ylabel)
    );
    for (k, se) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let xy: Vec<(f64, f64)> = se
            .x
            .iter()
            .zip(&se.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || **y > 0.0))
            .map(|(&x, &y)| (px(x), py(ty(y))))
            .collect();
        if se.points {
            for (x, y) in &xy {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2" fill="{c}"/>"#);
            }
        } else if !xy.is_empty() {
            let d: Vec<String> = xy.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, d.join(" "));
        }
        let ly = mt + 14.0 * k as f64 + 8.0;
        let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="10" height="3" fill="{c}"/>"#, wd - mr + 10.0, ly - 3.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, wd - mr + 24.0, ly + 1.0, esc(&se.label));
    }
    s.push_str("</svg>\n");
    s
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_has_csv_twin() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("decay");
        let s = Series::line("y", vec![0.0, 1.0, 2.0], vec![1.0, 0.1, 0.01]);
        plot(&stem, "t < 3", "t", "y", &[s], true).unwrap();
        let svg = std::fs::read_to_string(stem.with_extension("svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("t &lt; 3"));
        let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }
}
