//! 8-bit binary PGM previews of attribute maps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::io::gridfile::write_atomic;

/// Linear-interpolation percentile, `q` in [0, 100].
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::param("percentile of an empty set"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::param(format!("percentile {q} outside [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// Clips to the `[lo, hi]` percentiles and scales to 0..=255.
pub fn render(grid: &Grid2, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if lo >= hi {
        return Err(Error::param(format!("clip percentiles {lo} >= {hi}")));
    }
    let a = percentile(grid.as_slice(), lo)?;
    let b = percentile(grid.as_slice(), hi)?;
    let mut out = format!("P5 {} {} 255\n", grid.cols(), grid.rows()).into_bytes();
    out.extend(grid.as_slice().iter().map(|&v| {
        if b <= a {
            128
        } else {
            (((v.clamp(a, b) - a) / (b - a)) * 255.0).round() as u8
        }
    }));
    Ok(out)
}

pub fn write_pgm(path: &Path, grid: &Grid2, lo: f64, hi: f64) -> Result<()> {
    write_atomic(path, &render(grid, lo, hi)?)
}
