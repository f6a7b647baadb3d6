//! 8-bit binary PGM images of density slices.

use std::fs;
use std::path::Path;

use ndarray::ArrayView2;

use crate::error::{CliError, Result};

/// Encode a `(nx, ny)` slice as P5 with `x` to the right and `y` up. Values
/// are min-max normalized; a constant slice maps to mid-gray.
pub fn encode_pgm(slice: ArrayView2<'_, f64>) -> Vec<u8> {
    let (nx, ny) = slice.dim();
    let lo = slice.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n# min={lo:e} max={hi:e}\n{nx} {ny}\n255\n").into_bytes();
    for row in (0..ny).rev() {
        for i in 0..nx {
            let v = slice[[i, row]];
            let byte = if hi > lo {
                (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
            } else {
                128
            };
            out.push(byte);
        }
    }
    out
}

pub fn write_pgm(path: &Path, slice: ArrayView2<'_, f64>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, encode_pgm(slice)).map_err(|e| CliError::io(path, e))
}
