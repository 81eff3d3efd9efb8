//! Snapshot and time-series files.
//!
//! A snapshot CSV starts with the header `nx,ny,h,t`, then one line with
//! those values, then `ny` rows of `nx` values, bottom row first. Values are
//! written in shortest round-trip decimal form, so reading a file back gives
//! the same bits.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::run::{DiagnosticsRecord, RunOutput};
use crate::field::ScalarField;
use crate::geometry::CellMask;
use crate::{Error, Result};

/// Contents of a snapshot CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub t: f64,
    /// Row-major, bottom row first.
    pub values: Vec<f64>,
}

pub fn write_snapshot(field: &ScalarField, t: f64, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "nx,ny,h,t")?;
    writeln!(out, "{},{},{},{}", g.nx, g.ny, g.h(), t)?;
    for row in field.values().chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotData> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let bad = |msg: &str| Error::Parse(format!("{}: {msg}", path.display()));
    let header = lines.next().ok_or_else(|| bad("empty file"))??;
    if header.trim() != "nx,ny,h,t" {
        return Err(bad("missing `nx,ny,h,t` header"));
    }
    let meta = lines.next().ok_or_else(|| bad("missing dimensions"))??;
    let meta: Vec<&str> = meta.trim().split(',').collect();
    if meta.len() != 4 {
        return Err(bad("dimension line needs four values"));
    }
    let nx: usize = meta[0].parse().map_err(|_| bad("bad nx"))?;
    let ny: usize = meta[1].parse().map_err(|_| bad("bad ny"))?;
    let h: f64 = meta[2].parse().map_err(|_| bad("bad h"))?;
    let t: f64 = meta[3].parse().map_err(|_| bad("bad t"))?;
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .trim()
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad value")))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != nx {
            return Err(bad("row length differs from nx"));
        }
        values.extend(row);
    }
    if values.len() != nx * ny {
        return Err(bad("row count differs from ny"));
    }
    Ok(SnapshotData { nx, ny, h, t, values })
}

/// 8-bit binary greymap: `[0, sup]` maps linearly to `[255, 0]` (dense is
/// dark), non-interior cells are mid-grey. The top image row is the top row
/// of cells.
pub fn write_pgm(field: &ScalarField, mask: &CellMask, path: &Path) -> Result<()> {
    let g = field.grid();
    let sup = field.sup_norm();
    let mut pixels = Vec::with_capacity(g.len());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let k = g.index(i, j);
            let p = if !mask.is_interior(k) {
                128
            } else if sup > 0.0 {
                let s = (field.values()[k].max(0.0) / sup).min(1.0);
                255 - (255.0 * s).round() as u8
            } else {
                255
            };
            pixels.push(p);
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", g.nx, g.ny)?;
    out.write_all(&pixels)?;
    out.flush()?;
    Ok(())
}

/// Columns `t, mass_i, sup_i, tv_i, outflux_i, wallflux_i` for every
/// population `i` (1-based), then `dt` and `max_div`.
pub fn write_series(series: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let n = series.first().map_or(0, |r| r.populations.len());
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        for c in ["mass", "sup", "tv", "outflux", "wallflux"] {
            header.push(format!("{c}_{i}"));
        }
    }
    header.push("dt".into());
    header.push("max_div".into());
    writeln!(out, "{}", header.join(","))?;
    for r in series {
        let mut row = vec![r.t.to_string()];
        for p in &r.populations {
            for v in [p.mass, p.sup, p.tv, p.outflux, p.wall_flux] {
                row.push(v.to_string());
            }
        }
        row.push(r.dt.to_string());
        row.push(r.max_divergence.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `series.csv` and, under `snapshots/`, one CSV and one greymap per
/// population and snapshot.
pub fn write_run(output: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    write_series(&output.series, &dir.join("series.csv"))?;
    let mask = output.scenario.mask();
    for (k, snap) in output.snapshots.iter().enumerate() {
        for (i, rho) in snap.densities.iter().enumerate() {
            let stem = format!("rho{}_{k:04}", i + 1);
            write_snapshot(rho, snap.t, &dir.join("snapshots").join(format!("{stem}.csv")))?;
            write_pgm(rho, mask, &dir.join("snapshots").join(format!("{stem}.pgm")))?;
        }
    }
    Ok(())
}
