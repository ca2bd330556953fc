//! Plain columnar text dumps: `#`-prefixed header lines, then one
//! whitespace-separated record per line.

use std::io::{self, BufRead, Write};

use super::field::FieldRealization;
use super::trajectory::Snapshot;
use crate::num::{lit, to_f64, Real};

/// Writes slab `slab` of `field` on its sampling grid as `x y gx gy`.
pub fn write_field<T: Real, W: Write>(out: &mut W, field: &FieldRealization<T>, slab: usize) -> io::Result<()> {
    let spec = &field.spec;
    let n = spec.grid_points();
    writeln!(out, "# field seed={} realization={} slab={} dz_m={}", field.seed, field.index, slab, spec.slab_thickness)?;
    writeln!(out, "# x_m y_m gx gy")?;
    let s = &field.slabs[slab];
    for iy in 0..n {
        for ix in 0..n {
            let r = [spec.grid_spacing * lit(ix as f64), spec.grid_spacing * lit(iy as f64)];
            let g = s.gradient(r);
            writeln!(out, "{} {} {:e} {:e}", to_f64(r[0]), to_f64(r[1]), to_f64(g[0]), to_f64(g[1]))?;
        }
    }
    Ok(())
}

/// Writes recorded snapshots as `photon z_m x_m y_m qx_m-1 qy_m-1`.
pub fn write_trajectories<T: Real, W: Write>(out: &mut W, history: &[Snapshot<T>]) -> io::Result<()> {
    writeln!(out, "# trajectories snapshots={}", history.len())?;
    writeln!(out, "# photon z_m x_m y_m qx_m-1 qy_m-1")?;
    for snap in history {
        for (i, p) in snap.photons.iter().enumerate() {
            writeln!(
                out,
                "{} {} {:e} {:e} {:e} {:e}",
                i,
                to_f64(snap.z),
                to_f64(p.r[0]),
                to_f64(p.r[1]),
                to_f64(p.q[0]),
                to_f64(p.q[1])
            )?;
        }
    }
    Ok(())
}

/// Reads a dump back as rows of numbers, skipping header lines.
pub fn read_columns<R: BufRead>(input: R) -> io::Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{w}: {e}"))))
            .collect::<io::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
