use serde::{Deserialize, Serialize};

use super::ErythemaError;
use crate::imaging::LabImage;
use crate::masking::BinaryMask;

/// Signed a* difference, original minus reference, defined on `domain`.
/// Positive values mean the original is redder.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMap {
    width: u32,
    height: u32,
    delta_a: Vec<f32>,
    domain: BinaryMask,
}

impl DeltaMap {
    pub fn new(width: u32, height: u32, delta_a: Vec<f32>, domain: BinaryMask) -> Result<Self, ErythemaError> {
        if delta_a.len() != width as usize * height as usize || domain.dimensions() != (width, height) {
            return Err(ErythemaError::DimensionMismatch {
                a: (width, height),
                b: domain.dimensions(),
            });
        }
        if delta_a
            .iter()
            .zip(domain.as_slice())
            .any(|(v, &d)| d && !v.is_finite())
        {
            return Err(ErythemaError::InvalidParameter(
                "non-finite delta inside the domain".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            delta_a,
            domain,
        })
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

    pub fn values(&self) -> &[f32] {
        &self.delta_a
    }

    pub fn domain(&self) -> &BinaryMask {
        &self.domain
    }

    /// Values at domain pixels, raster order.
    pub fn domain_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.delta_a
            .iter()
            .zip(self.domain.as_slice())
            .filter(|(_, &d)| d)
            .map(|(&v, _)| v)
    }

    /// Copy with a constant added to every domain value.
    pub fn shifted(&self, offset: f32) -> Self {
        let delta_a = self
            .delta_a
            .iter()
            .zip(self.domain.as_slice())
            .map(|(&v, &d)| if d { v + offset } else { v })
            .collect();
        Self {
            delta_a,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    pub mu: f64,
    /// Population standard deviation (divisor n).
    pub sigma: f64,
    pub k: f64,
    /// `mu + k * sigma`.
    pub tau: f64,
    pub n: usize,
}

pub fn delta_a(orig: &LabImage, reference: &LabImage, mask: &BinaryMask) -> Result<DeltaMap, ErythemaError> {
    if orig.dimensions() != reference.dimensions() {
        return Err(ErythemaError::DimensionMismatch {
            a: orig.dimensions(),
            b: reference.dimensions(),
        });
    }
    if orig.dimensions() != mask.dimensions() {
        return Err(ErythemaError::DimensionMismatch {
            a: orig.dimensions(),
            b: mask.dimensions(),
        });
    }
    let values = orig.a().iter().zip(reference.a()).map(|(a, b)| a - b).collect();
    DeltaMap::new(orig.width(), orig.height(), values, mask.clone())
}

/// Mean and population standard deviation over the domain, summed in raster
/// order in f64.
pub fn delta_stats(map: &DeltaMap, k: f64) -> Result<DeltaStats, ErythemaError> {
    if !k.is_finite() {
        return Err(ErythemaError::InvalidParameter(format!("k must be finite, got {k}")));
    }
    let (n, sum) = map
        .domain_values()
        .fold((0usize, 0.0f64), |(n, s), v| (n + 1, s + v as f64));
    if n == 0 {
        return Err(ErythemaError::EmptyDomain);
    }
    let mu = sum / n as f64;
    let var = map
        .domain_values()
        .map(|v| (v as f64 - mu).powi(2))
        .sum::<f64>()
        / n as f64;
    let sigma = var.sqrt();
    Ok(DeltaStats {
        mu,
        sigma,
        k,
        tau: mu + k * sigma,
        n,
    })
}

/// Mean ΔL* and Δb* over `mask`, for diagnostics.
pub fn channel_difference_means(
    orig: &LabImage,
    reference: &LabImage,
    mask: &BinaryMask,
) -> Result<(f64, f64), ErythemaError> {
    if orig.dimensions() != reference.dimensions() || orig.dimensions() != mask.dimensions() {
        return Err(ErythemaError::DimensionMismatch {
            a: orig.dimensions(),
            b: reference.dimensions(),
        });
    }
    let mut n = 0usize;
    let (mut dl, mut db) = (0.0f64, 0.0f64);
    for (i, &m) in mask.as_slice().iter().enumerate() {
        if m {
            n += 1;
            dl += (orig.l()[i] - reference.l()[i]) as f64;
            db += (orig.b()[i] - reference.b()[i]) as f64;
        }
    }
    if n == 0 {
        return Err(ErythemaError::EmptyDomain);
    }
    Ok((dl / n as f64, db / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{srgb_to_lab, RasterImage};

    fn map(values: &[f32]) -> DeltaMap {
        let w = values.len() as u32;
        DeltaMap::new(w, 1, values.to_vec(), BinaryMask::filled(w, 1, true)).unwrap()
    }

    #[test]
    fn hand_computed_stats() {
        let s = delta_stats(&map(&[0.0, 0.0, 0.0, 10.0]), 1.5).unwrap();
        // population variance: (3·2.5² + 7.5²)/4 = 75/4
        assert!((s.mu - 2.5).abs() < 1e-12);
        assert!((s.sigma - (75.0f64 / 4.0).sqrt()).abs() < 1e-12);
        assert!((s.tau - 8.995_190_528_383_29).abs() < 1e-9);
        assert_eq!(s.tau, s.mu + s.k * s.sigma);
        assert_eq!(s.n, 4);
    }

    #[test]
    fn constant_map() {
        let s = delta_stats(&map(&[3.0; 6]), 1.5).unwrap();
        assert_eq!((s.mu, s.sigma, s.tau), (3.0, 0.0, 3.0));
        let s0 = delta_stats(&map(&[1.0, 5.0]), 0.0).unwrap();
        assert_eq!(s0.tau, s0.mu);
    }

    #[test]
    fn empty_domain_rejected() {
        let m = DeltaMap::new(2, 1, vec![1.0, 2.0], BinaryMask::filled(2, 1, false)).unwrap();
        assert!(matches!(delta_stats(&m, 1.5), Err(ErythemaError::EmptyDomain)));
        assert!(matches!(delta_stats(&map(&[1.0]), f64::NAN), Err(ErythemaError::InvalidParameter(_))));
    }

    #[test]
    fn identical_images_give_zero_map() {
        let img = RasterImage::from_fn(6, 4, |x, y| [(x * 40) as u8, (y * 60) as u8, 90]);
        let lab = srgb_to_lab(&img);
        let m = delta_a(&lab, &lab, &BinaryMask::filled(6, 4, true)).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn antisymmetric() {
        let a = srgb_to_lab(&RasterImage::from_fn(5, 5, |x, y| [(x * 50) as u8, 100, (y * 50) as u8]));
        let b = srgb_to_lab(&RasterImage::from_fn(5, 5, |x, y| [120, (x * y * 9) as u8, 30]));
        let mask = BinaryMask::filled(5, 5, true);
        let ab = delta_a(&a, &b, &mask).unwrap();
        let ba = delta_a(&b, &a, &mask).unwrap();
        assert!(ab.values().iter().zip(ba.values()).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn mismatch_rejected() {
        let a = srgb_to_lab(&RasterImage::filled(3, 3, [1, 2, 3]));
        let b = srgb_to_lab(&RasterImage::filled(3, 4, [1, 2, 3]));
        assert!(matches!(
            delta_a(&a, &b, &BinaryMask::filled(3, 3, true)),
            Err(ErythemaError::DimensionMismatch { .. })
        ));
    }
}
