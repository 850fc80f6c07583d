//! Field snapshots: CSV (`vx,vy[,vz],f`) and little-endian raw + JSON sidecar.

use super::field::{DistributionField, WeightConvention};
use super::grid::{GridSpec, VelocityGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const AXES: [&str; 3] = ["vx", "vy", "vz"];

pub fn write_field_csv(path: &Path, grid: &VelocityGrid, f: &DistributionField) -> Result<()> {
    f.check_grid(grid)?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = AXES[..grid.dim].to_vec();
    header.push("f");
    w.write_record(&header)?;
    for i in 0..grid.len() {
        let mut rec: Vec<String> = grid.node(i).iter().map(|x| format!("{x:e}")).collect();
        rec.push(format!("{:e}", f.values[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV snapshot written for `grid`; node coordinates must match.
pub fn read_field_csv(path: &Path, grid: &VelocityGrid) -> Result<DistributionField> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let expected: Vec<&str> = AXES[..grid.dim].iter().copied().chain(["f"]).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::GridMismatch(format!("header {header:?}, expected {expected:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if i >= grid.len() {
            return Err(Error::GridMismatch("more rows than grid nodes".into()));
        }
        for d in 0..grid.dim {
            let x: f64 = rec[d].parse().map_err(|e| Error::domain(format!("row {i}: {e}")))?;
            if (x - grid.node(i)[d]).abs() > 1e-9 * grid.extent {
                return Err(Error::GridMismatch(format!("row {i} is not node {i}")));
            }
        }
        values.push(rec[grid.dim].parse().map_err(|e| Error::domain(format!("row {i}: {e}")))?);
    }
    DistributionField::new(grid, values, WeightConvention::Plain)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub grid: GridSpec,
    pub convention: WeightConvention,
    pub len: usize,
    pub dtype: String,
    pub byte_order: String,
}

/// Writes `<stem>.bin` (f64 little-endian, node order) and `<stem>.json`.
pub fn write_field_binary(stem: &Path, f: &DistributionField) -> Result<()> {
    let mut bin = std::fs::File::create(stem.with_extension("bin"))?;
    let mut buf = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    bin.write_all(&buf)?;
    let meta = SnapshotMeta {
        grid: f.grid,
        convention: f.convention,
        len: f.values.len(),
        dtype: "f64".into(),
        byte_order: "little".into(),
    };
    std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_field_binary(stem: &Path) -> Result<DistributionField> {
    let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
    let mut bytes = Vec::new();
    std::fs::File::open(stem.with_extension("bin"))?.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * meta.len {
        return Err(Error::GridMismatch(format!("{} bytes for {} values", bytes.len(), meta.len)));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(DistributionField { grid: meta.grid, values, convention: meta.convention })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity_space::maxwellian_field;

    #[test]
    fn csv_and_binary_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = VelocityGrid::new(2, 7, 3.0).unwrap();
        let f = maxwellian_field(&g);
        let p = dir.path().join("f.csv");
        write_field_csv(&p, &g, &f).unwrap();
        let back = read_field_csv(&p, &g).unwrap();
        assert_eq!(back.values, f.values);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("vx,vy,f\n"));
        let stem = dir.path().join("snap");
        write_field_binary(&stem, &f).unwrap();
        assert_eq!(read_field_binary(&stem).unwrap(), f);
        let other = VelocityGrid::new(2, 9, 3.0).unwrap();
        assert!(read_field_csv(&p, &other).is_err());
    }
}
