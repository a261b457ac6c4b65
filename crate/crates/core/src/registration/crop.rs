use super::RegistrationError;
use crate::imaging::{RasterImage, Rect};
use crate::masking::{crop_mask, BinaryMask};

pub const DEFAULT_CROP_COVERAGE: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct CropResult {
    pub original: RasterImage,
    pub warped: RasterImage,
    pub valid: BinaryMask,
    pub rect: Rect,
}

/// Summed-area table with a zero first row and column.
fn integral(mask: &BinaryMask) -> Vec<u64> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut s = vec![0u64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += mask.as_slice()[y * w + x] as u64;
            s[(y + 1) * (w + 1) + x + 1] = s[y * (w + 1) + x + 1] + row;
        }
    }
    s
}

/// Largest rectangle centered on the image whose valid fraction is at least
/// `min_coverage`.
///
/// Candidates are the centered rectangles with symmetric insets; the one
/// with the largest area wins, ties going to the smaller horizontal inset.
pub fn central_crop_rect(valid: &BinaryMask, min_coverage: f64) -> Result<Rect, RegistrationError> {
    let (w, h) = valid.dimensions();
    if w == 0 || h == 0 || valid.is_empty() {
        return Err(RegistrationError::NoValidOverlap);
    }
    let s = integral(valid);
    let stride = w as usize + 1;
    let sum = |r: &Rect| -> u64 {
        let (x0, y0) = (r.x as usize, r.y as usize);
        let (x1, y1) = (x0 + r.width as usize, y0 + r.height as usize);
        s[y1 * stride + x1] + s[y0 * stride + x0] - s[y0 * stride + x1] - s[y1 * stride + x0]
    };
    let mut best: Option<Rect> = None;
    for ix in 0..=(w - 1) / 2 {
        let width = w - 2 * ix;
        if best.is_some_and(|b| (width as u64) * (h as u64) <= b.area()) {
            break;
        }
        // area shrinks with the vertical inset, so the first hit is best for this ix
        for iy in 0..=(h - 1) / 2 {
            let rect = Rect::new(ix, iy, width, h - 2 * iy);
            if best.is_some_and(|b| rect.area() <= b.area()) {
                break;
            }
            if sum(&rect) as f64 >= min_coverage * rect.area() as f64 {
                best = Some(rect);
                break;
            }
        }
    }
    best.ok_or(RegistrationError::NoValidOverlap)
}

pub fn central_crop(
    original: &RasterImage,
    warped: &RasterImage,
    valid: &BinaryMask,
    min_coverage: f64,
) -> Result<CropResult, RegistrationError> {
    if original.dimensions() != warped.dimensions() || original.dimensions() != valid.dimensions() {
        return Err(crate::imaging::ImagingError::DimensionMismatch {
            a: original.dimensions(),
            b: if original.dimensions() != warped.dimensions() {
                warped.dimensions()
            } else {
                valid.dimensions()
            },
        }
        .into());
    }
    let rect = central_crop_rect(valid, min_coverage)?;
    Ok(CropResult {
        original: original.crop(rect)?,
        warped: warped.crop(rect)?,
        valid: crop_mask(valid, rect).expect("rect fits by construction"),
        rect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_valid_is_noop() {
        let v = BinaryMask::filled(30, 20, true);
        assert_eq!(central_crop_rect(&v, DEFAULT_CROP_COVERAGE).unwrap(), Rect::full(30, 20));
    }

    #[test]
    fn border_is_removed() {
        let v = BinaryMask::from_fn(100, 80, |x, y| (10..90).contains(&x) && (10..70).contains(&y));
        assert_eq!(
            central_crop_rect(&v, DEFAULT_CROP_COVERAGE).unwrap(),
            Rect::new(10, 10, 80, 60)
        );
    }

    #[test]
    fn nothing_valid() {
        let v = BinaryMask::filled(10, 10, false);
        assert!(matches!(
            central_crop_rect(&v, DEFAULT_CROP_COVERAGE),
            Err(RegistrationError::NoValidOverlap)
        ));
    }

    #[test]
    fn crop_outputs_match_rect() {
        let img = RasterImage::from_fn(12, 12, |x, y| [x as u8, y as u8, 0]);
        let v = BinaryMask::from_fn(12, 12, |x, y| x >= 2 && y >= 2 && x < 10 && y < 10);
        let c = central_crop(&img, &img, &v, 1.0).unwrap();
        assert_eq!(c.rect, Rect::new(2, 2, 8, 8));
        assert_eq!(c.original.pixel(0, 0), [2, 2, 0]);
        assert_eq!(c.valid.count(), 64);
    }
}
