//! Face-parsing label maps, skin selection and binary-mask operations.

mod components;
mod labels;
mod morphology;

use std::path::PathBuf;

use thiserror::Error;

use crate::imaging::{ImagingError, Rect};

pub use components::{label_components, remove_small_components, Components};
pub use labels::{
    load_label_mask, load_label_mask_with_limit, select_skin, ClassMap, LabelMask,
    DEFAULT_EXCLUDE, DEFAULT_INCLUDE, DEFAULT_UNKNOWN_LIMIT, UNKNOWN_ID,
};
pub use morphology::{dilate, disc_offsets, erode, morph_close, morph_open};

#[derive(Debug, Error)]
pub enum MaskError {
    #[error(transparent)]
    Image(#[from] ImagingError),
    #[error("{}: label map must be a single-channel 8-bit PNG ({detail})", .path.display())]
    NotSingleChannel { path: PathBuf, detail: String },
    #[error("{}: {fraction:.4} of pixels carry ids missing from the class map (limit {limit}); first unknown id {example}", .path.display())]
    UnknownIds {
        path: PathBuf,
        fraction: f64,
        limit: f64,
        example: u8,
    },
    #[error("unknown class name {0:?}")]
    UnknownClassName(String),
    #[error("invalid class map: {0}")]
    InvalidClassMap(String),
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (u32, u32), b: (u32, u32) },
    #[error("rectangle {rect:?} exceeds {width}x{height} mask")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },
}

/// Per-pixel boolean mask, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, MaskError> {
        if bits.len() != width as usize * height as usize {
            return Err(MaskError::DimensionMismatch {
                a: (width, height),
                b: (bits.len() as u32, 1),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn from_rect(width: u32, height: u32, rect: Rect) -> Self {
        Self::from_fn(width, height, |x, y| rect.contains(x, y))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height, "mask index ({x},{y}) out of bounds");
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "mask index ({x},{y}) out of bounds");
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// 0/255 bytes for single-channel PNG output.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<(), MaskError> {
        if self.dimensions() != other.dimensions() {
            return Err(MaskError::DimensionMismatch {
                a: self.dimensions(),
                b: other.dimensions(),
            });
        }
        Ok(())
    }
}

pub fn mask_and(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask, MaskError> {
    a.check_dims(b)?;
    let bits = a.bits.iter().zip(&b.bits).map(|(&x, &y)| x && y).collect();
    Ok(BinaryMask { bits, ..*a })
}

pub fn mask_or(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask, MaskError> {
    a.check_dims(b)?;
    let bits = a.bits.iter().zip(&b.bits).map(|(&x, &y)| x || y).collect();
    Ok(BinaryMask { bits, ..*a })
}

pub fn mask_not(a: &BinaryMask) -> BinaryMask {
    BinaryMask {
        bits: a.bits.iter().map(|&x| !x).collect(),
        ..*a
    }
}

pub fn crop_mask(mask: &BinaryMask, rect: Rect) -> Result<BinaryMask, MaskError> {
    if !rect.fits_within(mask.width, mask.height) {
        return Err(MaskError::OutOfBounds {
            rect,
            width: mask.width,
            height: mask.height,
        });
    }
    Ok(BinaryMask::from_fn(rect.width, rect.height, |x, y| {
        mask.get(rect.x + x, rect.y + y)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_mask() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(a, b)| {
                    (
                        BinaryMask::new(w, h, a).unwrap(),
                        BinaryMask::new(w, h, b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn de_morgan((a, b) in arb_mask()) {
            let lhs = mask_not(&mask_and(&a, &b).unwrap());
            let rhs = mask_or(&mask_not(&a), &mask_not(&b)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn and_identities((a, _b) in arb_mask()) {
            let all = BinaryMask::filled(a.width(), a.height(), true);
            prop_assert_eq!(mask_and(&a, &all).unwrap(), a.clone());
            prop_assert!(mask_and(&a, &mask_not(&a)).unwrap().is_empty());
        }
    }

    #[test]
    fn algebra_rejects_mismatch() {
        let a = BinaryMask::filled(2, 2, true);
        let b = BinaryMask::filled(3, 2, true);
        assert!(matches!(mask_and(&a, &b), Err(MaskError::DimensionMismatch { .. })));
        assert!(matches!(mask_or(&a, &b), Err(MaskError::DimensionMismatch { .. })));
    }

    #[test]
    fn crop_cases() {
        let m = BinaryMask::from_fn(4, 3, |x, y| (x + y) % 2 == 0);
        assert_eq!(crop_mask(&m, Rect::full(4, 3)).unwrap(), m);
        let one = crop_mask(&m, Rect::new(1, 0, 1, 1)).unwrap();
        assert_eq!(one.dimensions(), (1, 1));
        assert!(!one.get(0, 0));
        assert!(matches!(
            crop_mask(&m, Rect::new(2, 1, 3, 1)),
            Err(MaskError::OutOfBounds { .. })
        ));
    }
}
