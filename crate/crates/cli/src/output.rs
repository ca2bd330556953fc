//! CSV sweep table and JSON metadata sidecar.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which is
//! locale independent; missing or failed values are written as `NaN`.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use scint_core::CurvePoint;

pub const CSV_COLUMNS: [&str; 9] = [
    "z_m",
    "sigma2_correlated",
    "sigma2_multiplicative",
    "mean_intensity_au",
    "dq2_m-2",
    "beam_radius_sq_m2",
    "applicability_ratio",
    "err_sigma2_corr",
    "err_sigma2_mult",
];

pub fn row(p: &CurvePoint) -> [f64; 9] {
    [
        p.z,
        p.sigma2_correlated,
        p.sigma2_multiplicative,
        p.mean_intensity,
        p.dq2,
        p.beam_radius_sq,
        p.applicability_ratio,
        p.err_sigma2_correlated,
        p.err_sigma2_multiplicative,
    ]
}

pub fn write_csv<W: Write>(out: &mut W, points: &[CurvePoint]) -> io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for p in points {
        let cells: Vec<String> = row(p).iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Reads a table written by [`write_csv`].
pub fn read_csv<R: BufRead>(input: R) -> io::Result<Vec<[f64; 9]>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    if header.trim() != CSV_COLUMNS.join(",") {
        return Err(bad(format!("unexpected header: {header}")));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(bad(format!("line {}: expected {} fields, got {}", n + 2, CSV_COLUMNS.len(), cells.len())));
        }
        let mut r = [0.0; 9];
        for (slot, c) in r.iter_mut().zip(&cells) {
            *slot = c.trim().parse().map_err(|e| bad(format!("line {}: `{c}`: {e}", n + 2)))?;
        }
        rows.push(r);
    }
    Ok(rows)
}

/// Sidecar path: the CSV path with `.json` appended.
pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
