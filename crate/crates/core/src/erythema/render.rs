use super::{DeltaMap, ErythemaError};
use crate::imaging::{quantize, RasterImage};
use crate::masking::BinaryMask;

/// Colour for pixels outside the analysis domain.
pub const NEUTRAL_GRAY: [u8; 3] = [128, 128, 128];

/// Diverging blue–white–red rendering. Zero maps to white, `hi` to pure red
/// and `lo` to pure blue. With `scale = None` the range is symmetric around
/// zero at the largest domain magnitude.
pub fn render_heatmap(map: &DeltaMap, scale: Option<(f32, f32)>) -> RasterImage {
    let (lo, hi) = scale.unwrap_or_else(|| {
        let m = map.domain_values().fold(0.0f32, |m, v| m.max(v.abs()));
        (-m, m)
    });
    let (neg, pos) = ((-lo).max(0.0), hi.max(0.0));
    let values = map.values();
    let domain = map.domain().as_slice();
    RasterImage::from_fn(map.width(), map.height(), |x, y| {
        let i = y as usize * map.width() as usize + x as usize;
        if !domain[i] {
            return NEUTRAL_GRAY;
        }
        let v = values[i];
        let limit = if v >= 0.0 { pos } else { neg };
        if v == 0.0 || limit == 0.0 {
            return [255, 255, 255];
        }
        let t = (v.abs() / limit).min(1.0);
        let fade = quantize(255.0 * (1.0 - t as f64));
        if v > 0.0 {
            [255, fade, fade]
        } else {
            [fade, fade, 255]
        }
    })
}

/// Alpha-blends `color` over `original` where `mask` is set.
pub fn render_overlay(
    original: &RasterImage,
    mask: &BinaryMask,
    color: [u8; 3],
    alpha: f32,
) -> Result<RasterImage, ErythemaError> {
    if original.dimensions() != mask.dimensions() {
        return Err(ErythemaError::DimensionMismatch {
            a: original.dimensions(),
            b: mask.dimensions(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ErythemaError::InvalidParameter(format!("alpha must be in [0, 1], got {alpha}")));
    }
    Ok(RasterImage::from_fn(original.width(), original.height(), |x, y| {
        let p = original.pixel(x, y);
        if !mask.get(x, y) {
            return p;
        }
        let a = alpha as f64;
        std::array::from_fn(|c| quantize((1.0 - a) * p[c] as f64 + a * color[c] as f64))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_endpoints() {
        let domain = BinaryMask::new(4, 1, vec![true, true, true, false]).unwrap();
        let m = DeltaMap::new(4, 1, vec![-2.0, 0.0, 2.0, 9.0], domain).unwrap();
        let img = render_heatmap(&m, None);
        assert_eq!(img.pixel(0, 0), [0, 0, 255]);
        assert_eq!(img.pixel(1, 0), [255, 255, 255]);
        assert_eq!(img.pixel(2, 0), [255, 0, 0]);
        assert_eq!(img.pixel(3, 0), NEUTRAL_GRAY);
    }

    #[test]
    fn heatmap_zero_map_is_white() {
        let m = DeltaMap::new(2, 2, vec![0.0; 4], BinaryMask::filled(2, 2, true)).unwrap();
        assert!(render_heatmap(&m, None).pixels().all(|p| p == [255, 255, 255]));
    }

    #[test]
    fn heatmap_explicit_scale_saturates() {
        let m = DeltaMap::new(3, 1, vec![-1.0, 5.0, 20.0], BinaryMask::filled(3, 1, true)).unwrap();
        let img = render_heatmap(&m, Some((-2.0, 10.0)));
        assert_eq!(img.pixel(0, 0), [128, 128, 255]);
        assert_eq!(img.pixel(1, 0), [255, 128, 128]);
        assert_eq!(img.pixel(2, 0), [255, 0, 0]);
    }

    #[test]
    fn overlay_blend() {
        let img = RasterImage::filled(2, 1, [100, 100, 100]);
        let mask = BinaryMask::new(2, 1, vec![true, false]).unwrap();
        let out = render_overlay(&img, &mask, [255, 0, 0], 0.5).unwrap();
        assert_eq!(out.pixel(0, 0), [178, 50, 50]);
        assert_eq!(out.pixel(1, 0), [100, 100, 100]);
    }

    #[test]
    fn overlay_rejects_bad_input() {
        let img = RasterImage::filled(2, 1, [0, 0, 0]);
        assert!(render_overlay(&img, &BinaryMask::filled(1, 1, true), [0, 0, 0], 0.5).is_err());
        assert!(render_overlay(&img, &BinaryMask::filled(2, 1, true), [0, 0, 0], 1.5).is_err());
    }
}
