use serde::{Deserialize, Serialize};

use super::{DeltaMap, DeltaStats};
use crate::masking::{morph_close, morph_open, remove_small_components, BinaryMask};

/// Threshold multiplier applied to σ.
pub const DEFAULT_K: f64 = 1.5;

/// True where the pixel is in the domain and its ΔA exceeds τ strictly.
pub fn threshold_mask(map: &DeltaMap, stats: &DeltaStats) -> BinaryMask {
    let bits = map
        .values()
        .iter()
        .zip(map.domain().as_slice())
        .map(|(&v, &d)| d && v as f64 > stats.tau)
        .collect();
    BinaryMask::new(map.width(), map.height(), bits).expect("map dimensions")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostprocessParams {
    pub open_radius: u32,
    pub close_radius: u32,
    /// Components with fewer pixels are dropped.
    pub min_area: usize,
}

impl PostprocessParams {
    pub const DEFAULT_OPEN_RADIUS: u32 = 1;
    pub const DEFAULT_CLOSE_RADIUS: u32 = 2;
    pub const DEFAULT_MIN_AREA_FRACTION: f64 = 0.0005;

    /// Defaults with `min_area` scaled to the domain size.
    pub fn for_domain(domain_pixels: usize, min_area_fraction: f64) -> Self {
        Self {
            open_radius: Self::DEFAULT_OPEN_RADIUS,
            close_radius: Self::DEFAULT_CLOSE_RADIUS,
            min_area: (domain_pixels as f64 * min_area_fraction.max(0.0)).ceil() as usize,
        }
    }

    pub fn identity() -> Self {
        Self {
            open_radius: 0,
            close_radius: 0,
            min_area: 0,
        }
    }
}

/// Open, close, then drop small 8-connected components.
pub fn postprocess(mask: &BinaryMask, params: &PostprocessParams) -> BinaryMask {
    let opened = morph_open(mask, params.open_radius);
    let closed = morph_close(&opened, params.close_radius);
    remove_small_components(&closed, params.min_area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erythema::delta_stats;

    fn map(values: &[f32]) -> DeltaMap {
        let w = values.len() as u32;
        DeltaMap::new(w, 1, values.to_vec(), BinaryMask::filled(w, 1, true)).unwrap()
    }

    #[test]
    fn constant_map_flags_nothing() {
        let m = map(&[4.0; 10]);
        let s = delta_stats(&m, 1.5).unwrap();
        assert!(threshold_mask(&m, &s).is_empty());
    }

    #[test]
    fn outlier_flagged() {
        let m = map(&[0.0, 0.0, 0.0, 10.0]);
        let s = delta_stats(&m, 1.5).unwrap();
        let t = threshold_mask(&m, &s);
        assert_eq!(t.as_slice(), &[false, false, false, true]);
    }

    #[test]
    fn outside_domain_never_flagged() {
        let domain = BinaryMask::new(3, 1, vec![true, true, false]).unwrap();
        let m = DeltaMap::new(3, 1, vec![0.0, 1.0, 100.0], domain).unwrap();
        let s = delta_stats(&m, 0.0).unwrap();
        assert_eq!(threshold_mask(&m, &s).as_slice(), &[false, true, false]);
    }

    #[test]
    fn postprocess_identity_and_empty() {
        let m = BinaryMask::from_fn(9, 9, |x, y| (x * y) % 4 == 1);
        assert_eq!(postprocess(&m, &PostprocessParams::identity()), m);
        let e = BinaryMask::filled(9, 9, false);
        assert!(postprocess(&e, &PostprocessParams::for_domain(81, 0.1)).is_empty());
    }

    #[test]
    fn min_area_from_fraction() {
        assert_eq!(PostprocessParams::for_domain(100_000, 0.0005).min_area, 50);
        assert_eq!(PostprocessParams::for_domain(10, 0.0005).min_area, 1);
    }
}
