use super::{ImagingError, RasterImage};
use crate::masking::BinaryMask;

/// Mean squared error over (masked) pixels and all three channels.
pub fn mse(a: &RasterImage, b: &RasterImage, mask: Option<&BinaryMask>) -> Result<f64, ImagingError> {
    if a.dimensions() != b.dimensions() {
        return Err(ImagingError::DimensionMismatch {
            a: a.dimensions(),
            b: b.dimensions(),
        });
    }
    if let Some(m) = mask {
        if m.dimensions() != a.dimensions() {
            return Err(ImagingError::DimensionMismatch {
                a: a.dimensions(),
                b: m.dimensions(),
            });
        }
    }
    let mut sum = 0u64;
    let mut count = 0u64;
    for (i, (pa, pb)) in a.pixels().zip(b.pixels()).enumerate() {
        if mask.is_some_and(|m| !m.as_slice()[i]) {
            continue;
        }
        for c in 0..3 {
            let d = pa[c] as i64 - pb[c] as i64;
            sum += (d * d) as u64;
        }
        count += 3;
    }
    if count == 0 {
        return Err(ImagingError::EmptyMask);
    }
    Ok(sum as f64 / count as f64)
}
