//! CSV and JSON formats for patterns, estimated curves and bound bands.
//!
//! A pattern is stored as `name.csv` (header `x1,...,xd`, one point per row) next to a
//! sidecar `name.json` describing how it was produced. Floats are written in their
//! shortest round-trip form, so reading a file back gives bit-identical coordinates.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::CurveBand;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, PointPattern, Window};
use crate::rng::RngSeed;

/// Sidecar metadata for a saved pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMeta {
    pub window: Window,
    /// Window on which statistics are meant to be computed, if narrower.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Window>,
    pub model: ModelSpec,
    pub seed: RngSeed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    pub sampler: String,
}

pub fn write_pattern_csv<W: Write>(pattern: &PointPattern, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=pattern.dim()).map(|i| format!("x{i}")).collect();
    w.write_record(&header)?;
    for p in pattern.points() {
        w.write_record(p.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pattern CSV; every point must lie in `window`.
pub fn read_pattern_csv<R: Read>(input: R, window: Window) -> Result<PointPattern> {
    let mut r = csv::Reader::from_reader(input);
    let d = window.dim();
    let header = r.headers()?.clone();
    let expected: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidParameter(format!(
            "pattern header {:?} does not match {expected:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut coords = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("row {}: cannot parse {field:?} as a number", row + 2))
            })?;
            coords.push(v);
        }
    }
    PointPattern::from_flat(window, coords)
}

/// Sidecar path for a pattern CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn save_pattern(csv_path: &Path, pattern: &PointPattern, meta: &PatternMeta) -> Result<()> {
    write_pattern_csv(pattern, BufWriter::new(File::create(csv_path)?))?;
    let mut side = BufWriter::new(File::create(sidecar_path(csv_path))?);
    serde_json::to_writer_pretty(&mut side, meta)?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(())
}

/// Loads a pattern CSV and its sidecar.
pub fn load_pattern(csv_path: &Path) -> Result<(PointPattern, PatternMeta)> {
    let meta: PatternMeta =
        serde_json::from_reader(BufReader::new(File::open(sidecar_path(csv_path))?))?;
    let pattern = read_pattern_csv(BufReader::new(File::open(csv_path)?), meta.window.clone())?;
    Ok((pattern, meta))
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Writes `t,estimate,std_err`; undefined (`NaN`) entries are left empty.
pub fn write_curve_csv<W: Write>(out: W, t: &[f64], estimate: &[f64], std_err: &[f64]) -> Result<()> {
    if estimate.len() != t.len() || std_err.len() != t.len() {
        return Err(Error::Domain("curve columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "estimate", "std_err"])?;
    for k in 0..t.len() {
        w.write_record([t[k].to_string(), fmt_opt(estimate[k]), fmt_opt(std_err[k])])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `t,lower,upper,estimate,std_err`; missing estimates are left empty.
pub fn write_band_csv<W: Write>(out: W, band: &CurveBand) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "lower", "upper", "estimate", "std_err"])?;
    for k in 0..band.len() {
        let est = band.estimate.as_ref().map_or(f64::NAN, |e| e[k]);
        let se = band.std_err.as_ref().map_or(f64::NAN, |e| e[k]);
        w.write_record([
            band.abscissae[k].to_string(),
            band.bands[k].lower.to_string(),
            band.bands[k].upper.to_string(),
            fmt_opt(est),
            fmt_opt(se),
        ])?;
    }
    w.flush()?;
    Ok(())
}
