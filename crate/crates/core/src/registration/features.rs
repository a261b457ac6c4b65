//! Corner detection ranked by Harris response, with intensity-centroid
//! orientation.

use std::f32::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RegistrationError;
use crate::imaging::GrayImage;

/// Keypoints stay this many pixels away from every border, which leaves
/// room for the orientation disc and the rotated sampling pattern.
pub const KEYPOINT_MARGIN: f32 = 16.0;

const ORIENTATION_RADIUS: i32 = 15;
const HARRIS_K: f32 = 0.04;
const WINDOW_SIGMA: f32 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Harris response, non-negative for accepted corners.
    pub score: f32,
    /// Radians in `[0, 2π)`.
    pub orientation: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub max_count: usize,
    /// Minimum Harris response (gradients measured on a 0–1 intensity scale).
    pub threshold: f32,
    /// Non-maximum suppression radius in pixels.
    pub nms_radius: u32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            max_count: 1500,
            threshold: 1e-6,
            nms_radius: 3,
        }
    }
}

pub(crate) fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i32;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution with clamped borders.
pub(crate) fn blur(data: &[f32], width: usize, height: usize, kernel: &[f32]) -> Vec<f32> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0f32; data.len()];
    tmp.par_chunks_exact_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            let src = &data[y * width..(y + 1) * width];
            for (x, out) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    let xx = (x as isize + k as isize - r).clamp(0, width as isize - 1) as usize;
                    acc += w * src[xx];
                }
                *out = acc;
            }
        });
    let mut out = vec![0.0f32; data.len()];
    out.par_chunks_exact_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    let yy = (y as isize + k as isize - r).clamp(0, height as isize - 1) as usize;
                    acc += w * tmp[yy * width + x];
                }
                *o = acc;
            }
        });
    out
}

/// Harris response `det(M) − k·tr(M)²` of the Gaussian-windowed structure tensor.
fn harris_response(image: &GrayImage) -> Vec<f32> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let src = image.as_slice();
    let at = |x: isize, y: isize| -> f32 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        src[y * w + x] / 255.0
    };
    let mut ixx = vec![0.0f32; w * h];
    let mut iyy = vec![0.0f32; w * h];
    let mut ixy = vec![0.0f32; w * h];
    ixx.par_chunks_exact_mut(w)
        .zip(iyy.par_chunks_exact_mut(w))
        .zip(ixy.par_chunks_exact_mut(w))
        .enumerate()
        .for_each(|(y, ((rxx, ryy), rxy))| {
            let y = y as isize;
            for x in 0..w {
                let xi = x as isize;
                let gx = (at(xi + 1, y - 1) + 2.0 * at(xi + 1, y) + at(xi + 1, y + 1)
                    - at(xi - 1, y - 1)
                    - 2.0 * at(xi - 1, y)
                    - at(xi - 1, y + 1))
                    / 8.0;
                let gy = (at(xi - 1, y + 1) + 2.0 * at(xi, y + 1) + at(xi + 1, y + 1)
                    - at(xi - 1, y - 1)
                    - 2.0 * at(xi, y - 1)
                    - at(xi + 1, y - 1))
                    / 8.0;
                rxx[x] = gx * gx;
                ryy[x] = gy * gy;
                rxy[x] = gx * gy;
            }
        });
    let kernel = gaussian_kernel(WINDOW_SIGMA);
    let sxx = blur(&ixx, w, h, &kernel);
    let syy = blur(&iyy, w, h, &kernel);
    let sxy = blur(&ixy, w, h, &kernel);
    sxx.par_iter()
        .zip(&syy)
        .zip(&sxy)
        .map(|((&a, &b), &c)| {
            let tr = a + b;
            a * b - c * c - HARRIS_K * tr * tr
        })
        .collect()
}

/// Intensity-centroid angle of the disc around `(x, y)`, in `[0, 2π)`.
pub fn keypoint_orientation(image: &GrayImage, x: f32, y: f32) -> f32 {
    let cx = x.round() as i32;
    let cy = y.round() as i32;
    let (w, h) = (image.width() as i32, image.height() as i32);
    let (mut m10, mut m01) = (0.0f64, 0.0f64);
    for dy in -ORIENTATION_RADIUS..=ORIENTATION_RADIUS {
        for dx in -ORIENTATION_RADIUS..=ORIENTATION_RADIUS {
            if dx * dx + dy * dy > ORIENTATION_RADIUS * ORIENTATION_RADIUS {
                continue;
            }
            let (px, py) = (cx + dx, cy + dy);
            if px < 0 || py < 0 || px >= w || py >= h {
                continue;
            }
            let v = image.get(px as u32, py as u32) as f64;
            m10 += dx as f64 * v;
            m01 += dy as f64 * v;
        }
    }
    let angle = (m01.atan2(m10) as f32).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if angle >= TAU {
        0.0
    } else {
        angle
    }
}

/// Parabolic sub-pixel offset from three samples around a peak.
fn parabolic_offset(left: f32, center: f32, right: f32) -> f32 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < f32::EPSILON {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Detects at most `params.max_count` corners, sorted by descending score.
pub fn detect_keypoints(
    image: &GrayImage,
    params: &DetectorParams,
) -> Result<Vec<Keypoint>, RegistrationError> {
    let border = KEYPOINT_MARGIN as u32 + 1;
    let min = 2 * border + 3;
    let (w, h) = image.dimensions();
    if w < min || h < min {
        return Err(RegistrationError::ImageTooSmall {
            width: w,
            height: h,
            min,
        });
    }
    let response = harris_response(image);
    let (wu, hu) = (w as usize, h as usize);
    let r = params.nms_radius as isize;
    let threshold = params.threshold.max(0.0);

    let mut candidates: Vec<Keypoint> = (border as usize..hu - border as usize)
        .into_par_iter()
        .flat_map_iter(|y| {
            let response = &response;
            (border as usize..wu - border as usize).filter_map(move |x| {
                let v = response[y * wu + x];
                if v.is_nan() || v <= threshold {
                    return None;
                }
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let xx = (x as isize + dx).clamp(0, wu as isize - 1) as usize;
                        let yy = (y as isize + dy).clamp(0, hu as isize - 1) as usize;
                        let n = response[yy * wu + xx];
                        // ties resolve toward the earlier pixel in raster order
                        let earlier = (dy, dx) < (0, 0);
                        if n > v || (earlier && n == v) {
                            return None;
                        }
                    }
                }
                let ox = parabolic_offset(response[y * wu + x - 1], v, response[y * wu + x + 1]);
                let oy = parabolic_offset(response[(y - 1) * wu + x], v, response[(y + 1) * wu + x]);
                Some(Keypoint {
                    x: x as f32 + ox,
                    y: y as f32 + oy,
                    score: v,
                    orientation: 0.0,
                })
            })
        })
        .collect();

    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    candidates.truncate(params.max_count);
    candidates
        .par_iter_mut()
        .for_each(|kp| kp.orientation = keypoint_orientation(image, kp.x, kp.y));
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_corners() {
        let img = GrayImage::from_fn(64, 64, |_, _| 120.0);
        assert!(detect_keypoints(&img, &DetectorParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn too_small_is_rejected() {
        let img = GrayImage::from_fn(20, 64, |_, _| 0.0);
        assert!(matches!(
            detect_keypoints(&img, &DetectorParams::default()),
            Err(RegistrationError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn square_corners_found() {
        let img = GrayImage::from_fn(128, 128, |x, y| {
            if (40..88).contains(&x) && (40..88).contains(&y) {
                230.0
            } else {
                20.0
            }
        });
        let kps = detect_keypoints(&img, &DetectorParams::default()).unwrap();
        // geometric corners sit on pixel boundaries
        for (cx, cy) in [(39.5, 39.5), (87.5, 39.5), (39.5, 87.5), (87.5, 87.5)] {
            let best = kps
                .iter()
                .map(|k| ((k.x - cx).powi(2) + (k.y - cy).powi(2)).sqrt())
                .fold(f32::INFINITY, f32::min);
            assert!(best <= 2.0, "corner ({cx},{cy}) nearest {best}");
        }
        assert!(kps.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn checkerboard_saddles() {
        let img = GrayImage::from_fn(256, 256, |x, y| {
            if ((x / 32) + (y / 32)) % 2 == 0 {
                220.0
            } else {
                30.0
            }
        });
        let kps = detect_keypoints(&img, &DetectorParams::default()).unwrap();
        let mut hit = 0;
        for j in 1..8 {
            for i in 1..8 {
                let (cx, cy) = (i as f32 * 32.0 - 0.5, j as f32 * 32.0 - 0.5);
                if kps
                    .iter()
                    .any(|k| (k.x - cx).abs() <= 2.0 && (k.y - cy).abs() <= 2.0)
                {
                    hit += 1;
                }
            }
        }
        assert!(hit >= 40, "only {hit} of 49 junctions detected");
    }

    #[test]
    fn orientation_in_range_and_tracks_gradient() {
        // brighter to the right → centroid points along +x
        let img = GrayImage::from_fn(64, 64, |x, _| x as f32 * 3.0);
        let a = keypoint_orientation(&img, 32.0, 32.0);
        assert!(!(1e-3..=TAU - 1e-3).contains(&a), "{a}");
        // brighter downward → +y, i.e. π/2
        let img = GrayImage::from_fn(64, 64, |_, y| y as f32 * 3.0);
        let a = keypoint_orientation(&img, 32.0, 32.0);
        assert!((a - std::f32::consts::FRAC_PI_2).abs() < 1e-3, "{a}");
    }

    #[test]
    fn max_count_respected() {
        let img = GrayImage::from_fn(256, 256, |x, y| {
            if ((x / 16) + (y / 16)) % 2 == 0 {
                220.0
            } else {
                30.0
            }
        });
        let params = DetectorParams {
            max_count: 10,
            ..Default::default()
        };
        assert_eq!(detect_keypoints(&img, &params).unwrap().len(), 10);
    }
}
