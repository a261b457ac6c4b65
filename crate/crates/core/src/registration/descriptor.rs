//! Steered 256-bit binary descriptors.
//!
//! Each bit compares two smoothed intensities sampled at a fixed pair of
//! offsets, rotated by the keypoint orientation. The 256 offset pairs are
//! drawn once from a seeded generator so every build uses the same pattern.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::features::{blur, gaussian_kernel, Keypoint, KEYPOINT_MARGIN};
use crate::imaging::GrayImage;

/// Every sampling offset lies within this distance of the keypoint.
pub const PATTERN_RADIUS: f32 = 13.0;

const PATTERN_SEED: u64 = 0x5eed_0b1e_c7b1_2560;
const PATTERN_SIGMA: f32 = 31.0 / 5.0;
const SMOOTHING_SIGMA: f32 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Descriptor {
    pub bits: [u64; 4],
}

impl Descriptor {
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Descriptors for the keypoints that cleared the border margin.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub descriptors: Vec<Descriptor>,
    /// `indices[i]` is the input keypoint index of `descriptors[i]`.
    pub indices: Vec<usize>,
}

type OffsetPair = [(f32, f32); 2];

fn sampling_pattern() -> &'static [OffsetPair; 256] {
    static PATTERN: OnceLock<[OffsetPair; 256]> = OnceLock::new();
    PATTERN.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(PATTERN_SEED);
        let mut point = || loop {
            let u1: f32 = rng.random_range(f32::EPSILON..1.0);
            let u2: f32 = rng.random();
            let mag = PATTERN_SIGMA * (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f32::consts::TAU * u2).sin_cos();
            let (x, y) = (mag * c, mag * s);
            if x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS {
                return (x, y);
            }
        };
        let mut pattern = [[(0.0, 0.0); 2]; 256];
        for pair in pattern.iter_mut() {
            loop {
                let p = point();
                let q = point();
                if (p.0 - q.0).abs() + (p.1 - q.1).abs() > 1.0 {
                    *pair = [p, q];
                    break;
                }
            }
        }
        pattern
    })
}

fn within_margin(image: &GrayImage, kp: &Keypoint) -> bool {
    let (w, h) = (image.width() as f32, image.height() as f32);
    kp.x >= KEYPOINT_MARGIN
        && kp.y >= KEYPOINT_MARGIN
        && kp.x <= w - 1.0 - KEYPOINT_MARGIN
        && kp.y <= h - 1.0 - KEYPOINT_MARGIN
}

/// Computes one descriptor per keypoint inside the margin; others are dropped.
pub fn compute_descriptors(image: &GrayImage, keypoints: &[Keypoint]) -> DescriptorSet {
    let indices: Vec<usize> = keypoints
        .iter()
        .enumerate()
        .filter(|(_, kp)| within_margin(image, kp))
        .map(|(i, _)| i)
        .collect();
    if indices.is_empty() {
        return DescriptorSet {
            descriptors: Vec::new(),
            indices,
        };
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    let smoothed = GrayImage::new(
        image.width(),
        image.height(),
        blur(image.as_slice(), w, h, &gaussian_kernel(SMOOTHING_SIGMA)),
    )
    .expect("same dimensions");
    let pattern = sampling_pattern();
    let descriptors = indices
        .par_iter()
        .map(|&i| {
            let kp = &keypoints[i];
            let (s, c) = kp.orientation.sin_cos();
            let sample = |(ox, oy): (f32, f32)| {
                let x = kp.x + c * ox - s * oy;
                let y = kp.y + s * ox + c * oy;
                smoothed
                    .sample_bilinear(x, y)
                    .expect("margin guarantees pattern support")
            };
            let mut d = Descriptor::default();
            for (bit, pair) in pattern.iter().enumerate() {
                if sample(pair[0]) < sample(pair[1]) {
                    d.bits[bit / 64] |= 1 << (bit % 64);
                }
            }
            d
        })
        .collect();
    DescriptorSet {
        descriptors,
        indices,
    }
}
