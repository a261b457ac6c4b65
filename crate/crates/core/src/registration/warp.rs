use rayon::prelude::*;

use super::{Homography, RegistrationError};
use crate::imaging::{quantize, RasterImage};
use crate::masking::BinaryMask;

// Slack for positions that should land exactly on the last row/column.
const EDGE_EPS: f64 = 1e-6;

/// Inverse-maps every output pixel through `h⁻¹` and samples `reference`
/// bilinearly. Pixels without full bilinear support are filled with 0 and
/// flagged false in the returned mask.
pub fn warp_to(
    reference: &RasterImage,
    h: &Homography,
    out_width: u32,
    out_height: u32,
) -> Result<(RasterImage, BinaryMask), RegistrationError> {
    assert!(out_width > 0 && out_height > 0, "zero-sized warp target");
    let inv = h.inverse()?;
    let (rw, rh) = reference.dimensions();
    let (max_x, max_y) = ((rw - 1) as f64, (rh - 1) as f64);
    let row_len = out_width as usize;
    let mut data = vec![0u8; row_len * out_height as usize * 3];
    let mut valid = vec![false; row_len * out_height as usize];
    data.par_chunks_exact_mut(row_len * 3)
        .zip(valid.par_chunks_exact_mut(row_len))
        .enumerate()
        .for_each(|(y, (row, vrow))| {
            for x in 0..row_len {
                let Some([sx, sy]) = inv.apply(x as f64, y as f64) else {
                    continue;
                };
                if !(sx >= -EDGE_EPS && sy >= -EDGE_EPS && sx <= max_x + EDGE_EPS && sy <= max_y + EDGE_EPS) {
                    continue;
                }
                let sx = sx.clamp(0.0, max_x);
                let sy = sy.clamp(0.0, max_y);
                let x0 = sx.floor() as u32;
                let y0 = sy.floor() as u32;
                let x1 = (x0 + 1).min(rw - 1);
                let y1 = (y0 + 1).min(rh - 1);
                let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
                let (p00, p10) = (reference.pixel(x0, y0), reference.pixel(x1, y0));
                let (p01, p11) = (reference.pixel(x0, y1), reference.pixel(x1, y1));
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - tx) + p10[c] as f64 * tx;
                    let bottom = p01[c] as f64 * (1.0 - tx) + p11[c] as f64 * tx;
                    row[x * 3 + c] = quantize(top * (1.0 - ty) + bottom * ty);
                }
                vrow[x] = true;
            }
        });
    let image = RasterImage::new(out_width, out_height, data).expect("sized buffer");
    let mask = BinaryMask::new(out_width, out_height, valid).expect("sized buffer");
    Ok((image, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: u32, h: u32) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| [(x * 7 % 251) as u8, (y * 11 % 241) as u8, ((x + y) % 256) as u8])
    }

    #[test]
    fn identity_copies() {
        let img = textured(40, 30);
        let (out, mask) = warp_to(&img, &Homography::identity(), 40, 30).unwrap();
        assert_eq!(out, img);
        assert_eq!(mask.count(), 1200);
    }

    #[test]
    fn integer_translation_shifts_exactly() {
        let img = textured(50, 20);
        let (out, mask) = warp_to(&img, &Homography::translation(10.0, 0.0), 50, 20).unwrap();
        for y in 0..20 {
            for x in 0..50 {
                if x < 10 {
                    assert!(!mask.get(x, y));
                    assert_eq!(out.pixel(x, y), [0, 0, 0]);
                } else {
                    assert!(mask.get(x, y));
                    assert_eq!(out.pixel(x, y), img.pixel(x - 10, y));
                }
            }
        }
    }

    #[test]
    fn everything_outside() {
        let img = textured(20, 20);
        let (out, mask) = warp_to(&img, &Homography::translation(500.0, 0.0), 20, 20).unwrap();
        assert!(mask.is_empty());
        assert!(out.as_bytes().iter().all(|&v| v == 0));
    }
}
