//! Mean squared error and peak signal-to-noise ratio between captures.

use crate::frame::PixelBuffer;
use crate::lmt::LmtError;

/// Mean squared error over all pixels and channels, 0–255 scale.
pub fn mse(a: &PixelBuffer, b: &PixelBuffer) -> Result<f64, LmtError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(LmtError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.data().len() as f64)
}

/// PSNR between two equal-sized captures: 100 for identical frames, else
/// `20·log10(255/√mse)`, clamped into [0, 100] so the identical-frame
/// sentinel and the formula share a ceiling (tiny errors on large frames
/// would otherwise exceed 100).
pub fn psnr(a: &PixelBuffer, b: &PixelBuffer) -> Result<f64, LmtError> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(100.0);
    }
    Ok((20.0 * (255.0 / e.sqrt()).log10()).clamp(0.0, 100.0))
}

/// PSNR of a capture relative to its predecessor; the first capture of a
/// run (no predecessor) is defined as 100.
pub fn capture_psnr(
    current: &PixelBuffer,
    previous: Option<&PixelBuffer>,
) -> Result<f64, LmtError> {
    match previous {
        None => Ok(100.0),
        Some(prev) => psnr(current, prev),
    }
}
