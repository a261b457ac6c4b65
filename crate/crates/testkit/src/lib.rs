//! Test oracles and synthetic fixtures shared by the workspace test suites.
//!
//! The colour oracle here is written from the published sRGB definition
//! (primary chromaticities, white point and transfer curve) rather than from
//! the library's precomputed constants, so agreement between the two is a
//! meaningful check.

use std::path::Path;

use erysegm_core::imaging::encode_gray_png;
use erysegm_core::registration::Match;
use erysegm_core::{BinaryMask, RasterImage};
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Colour oracle

const PRIMARIES: [[f64; 2]; 3] = [[0.64, 0.33], [0.30, 0.60], [0.15, 0.06]];
const WHITE_XY: [f64; 2] = [0.3127, 0.3290];

fn xy_to_xyz([x, y]: [f64; 2]) -> Vector3<f64> {
    Vector3::new(x / y, 1.0, (1.0 - x - y) / y)
}

/// Reference white (Y = 1) implied by the chromaticity coordinates.
pub fn oracle_white() -> Vector3<f64> {
    xy_to_xyz(WHITE_XY)
}

/// Linear RGB → XYZ built from the primaries so that RGB (1,1,1) lands on
/// the white point.
pub fn oracle_rgb_to_xyz() -> Matrix3<f64> {
    let m = Matrix3::from_columns(&PRIMARIES.map(xy_to_xyz));
    let s = m.try_inverse().expect("primaries independent") * oracle_white();
    m * Matrix3::from_diagonal(&s)
}

fn decode(c: u8) -> f64 {
    let v = c as f64 / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn encode(v: f64) -> f64 {
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > 0.008856 {
        t.cbrt()
    } else {
        7.787 * t + 16.0 / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    if f.powi(3) > 0.008856 {
        f.powi(3)
    } else {
        (f - 16.0 / 116.0) / 7.787
    }
}

pub fn oracle_srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = Vector3::new(decode(rgb[0]), decode(rgb[1]), decode(rgb[2]));
    let xyz = oracle_rgb_to_xyz() * lin;
    let w = oracle_white();
    let (fx, fy, fz) = (lab_f(xyz.x / w.x), lab_f(xyz.y / w.y), lab_f(xyz.z / w.z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Inverse of [`oracle_srgb_to_lab`], returning unclamped 0–255 floats.
pub fn oracle_lab_to_srgb([l, a, b]: [f64; 3]) -> [f64; 3] {
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let w = oracle_white();
    let xyz = Vector3::new(lab_f_inv(fx) * w.x, lab_f_inv(fy) * w.y, lab_f_inv(fz) * w.z);
    let lin = oracle_rgb_to_xyz().try_inverse().expect("invertible") * xyz;
    [0, 1, 2].map(|i| encode(lin[i]) * 255.0)
}

pub fn delta_e(p: [f64; 3], q: [f64; 3]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

/// Raises a* by `delta` at constant L* and b*, rounding back to 8 bits.
pub fn boost_a_star(rgb: [u8; 3], delta: f64) -> [u8; 3] {
    let [l, a, b] = oracle_srgb_to_lab(rgb);
    oracle_lab_to_srgb([l, a + delta, b]).map(|v| v.round().clamp(0.0, 255.0) as u8)
}

// ---------------------------------------------------------------------------
// Homographies

/// Exact homography taking `src[i]` to `dst[i]`, via the 8×8 system with
/// h22 fixed to 1.
pub fn homography_from_corners(src: [[f64; 2]; 4], dst: [[f64; 2]; 4]) -> Matrix3<f64> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut rhs = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let ([x, y], [u, v]) = (src[i], dst[i]);
        let r = 2 * i;
        a.row_mut(r).copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        a.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        rhs[r] = u;
        rhs[r + 1] = v;
    }
    let h = a.lu().solve(&rhs).expect("non-degenerate corners");
    Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0)
}

pub fn apply(h: &Matrix3<f64>, [x, y]: [f64; 2]) -> [f64; 2] {
    let p = h * Vector3::new(x, y, 1.0);
    [p.x / p.z, p.y / p.z]
}

pub fn image_corners(width: u32, height: u32) -> [[f64; 2]; 4] {
    let (w, h) = ((width - 1) as f64, (height - 1) as f64);
    [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
}

/// Moves each image corner independently by up to `max_shift` pixels per
/// axis and returns the homography from the original corners to the moved
/// ones.
pub fn random_homography(rng: &mut impl Rng, width: u32, height: u32, max_shift: f64) -> Matrix3<f64> {
    let src = image_corners(width, height);
    let dst = src.map(|[x, y]| {
        [
            x + rng.random_range(-max_shift..=max_shift),
            y + rng.random_range(-max_shift..=max_shift),
        ]
    });
    homography_from_corners(src, dst)
}

/// Largest displacement between two homographies over the corners of a
/// `width × height` image.
pub fn max_corner_error(estimate: &Matrix3<f64>, truth: &Matrix3<f64>, width: u32, height: u32) -> f64 {
    image_corners(width, height)
        .iter()
        .map(|&c| {
            let (p, q) = (apply(estimate, c), apply(truth, c));
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

/// `out(q) = src(h · q)` with bilinear sampling; black outside `src`.
pub fn resample(src: &RasterImage, h: &Matrix3<f64>, width: u32, height: u32) -> RasterImage {
    let (sw, sh) = src.dimensions();
    RasterImage::from_fn(width, height, |x, y| {
        let [sx, sy] = apply(h, [x as f64, y as f64]);
        if !(sx >= 0.0 && sy >= 0.0 && sx <= (sw - 1) as f64 && sy <= (sh - 1) as f64) {
            return [0, 0, 0];
        }
        let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
        let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
        let (p00, p10, p01, p11) = (src.pixel(x0, y0), src.pixel(x1, y0), src.pixel(x0, y1), src.pixel(x1, y1));
        [0, 1, 2].map(|c| {
            let top = p00[c] as f64 * (1.0 - tx) + p10[c] as f64 * tx;
            let bottom = p01[c] as f64 * (1.0 - tx) + p11[c] as f64 * tx;
            (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8
        })
    })
}

/// Adds random index pairs until they make up `fraction` of the returned list.
pub fn inject_outliers(
    matches: &[Match],
    count_a: usize,
    count_b: usize,
    fraction: f64,
    rng: &mut impl Rng,
) -> Vec<Match> {
    let extra = (matches.len() as f64 * fraction / (1.0 - fraction)).round() as usize;
    let mut out = matches.to_vec();
    out.extend((0..extra).map(|_| Match {
        index_a: rng.random_range(0..count_a),
        index_b: rng.random_range(0..count_b),
        distance: 0,
        ratio: 0.0,
    }));
    out.shuffle(rng);
    out
}

// ---------------------------------------------------------------------------
// Images

/// Smooth noise in [0, 1] from a random lattice with `cell`-pixel spacing.
pub fn value_noise(rng: &mut impl Rng, width: u32, height: u32, cell: f64) -> Vec<f64> {
    let gw = (width as f64 / cell).ceil() as usize + 2;
    let gh = (height as f64 / cell).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 / cell, y as f64 / cell);
            let (ix, iy) = (fx as usize, fy as usize);
            let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
            let g = |i: usize, j: usize| grid[j * gw + i];
            let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
            let bottom = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Paints `count` axis-aligned rectangles or ellipses; `color` receives three
/// uniform draws.
fn paint_shapes(
    img: &mut RasterImage,
    rng: &mut impl Rng,
    count: usize,
    size: (u32, u32),
    mut color: impl FnMut([f64; 3]) -> [u8; 3],
) {
    let (w, h) = img.dimensions();
    for _ in 0..count {
        let rw = rng.random_range(size.0..=size.1);
        let rh = rng.random_range(size.0..=size.1);
        let x0 = rng.random_range(0..w.saturating_sub(rw).max(1));
        let y0 = rng.random_range(0..h.saturating_sub(rh).max(1));
        let c = color([rng.random(), rng.random(), rng.random()]);
        let disc = rng.random_bool(0.4);
        let (cx, cy) = (x0 as f64 + rw as f64 / 2.0, y0 as f64 + rh as f64 / 2.0);
        for y in y0..(y0 + rh).min(h) {
            for x in x0..(x0 + rw).min(w) {
                let inside = !disc || {
                    let (dx, dy) = ((x as f64 - cx) / (rw as f64 / 2.0), (y as f64 - cy) / (rh as f64 / 2.0));
                    dx * dx + dy * dy <= 1.0
                };
                if inside {
                    img.set_pixel(x, y, c);
                }
            }
        }
    }
}

/// Colourful multi-scale texture with scattered rectangles and ellipses;
/// rich in corners for registration tests.
pub fn textured_image(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = rng(seed);
    let layers: Vec<[Vec<f64>; 3]> = [48.0, 12.0, 4.0]
        .iter()
        .map(|&cell| [0, 1, 2].map(|_| value_noise(&mut rng, width, height, cell)))
        .collect();
    let weights = [0.55, 0.3, 0.15];
    let mut img = RasterImage::from_fn(width, height, |x, y| {
        let i = (y * width + x) as usize;
        [0, 1, 2].map(|c| {
            let v: f64 = layers.iter().zip(weights).map(|(l, wt)| l[c][i] * wt).sum();
            (v * 255.0).round().clamp(0.0, 255.0) as u8
        })
    });
    let count = (width as usize * height as usize) / 2500;
    paint_shapes(&mut img, &mut rng, count, (6, 48), |u| u.map(|v| (v * 255.0) as u8));
    img
}

/// Band-limited colour noise without hard edges, for resampling tests.
pub fn smooth_image(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = rng(seed);
    let layers: Vec<[Vec<f64>; 3]> = [40.0, 14.0]
        .iter()
        .map(|&cell| [0, 1, 2].map(|_| value_noise(&mut rng, width, height, cell)))
        .collect();
    RasterImage::from_fn(width, height, |x, y| {
        let i = (y * width + x) as usize;
        [0, 1, 2].map(|c| {
            let v = 0.65 * layers[0][c][i] + 0.35 * layers[1][c][i];
            (v * 255.0).round().clamp(0.0, 255.0) as u8
        })
    })
}

/// Skin-toned face stand-in with erythema patches of known extent.
pub struct SkinFixture {
    /// Lesion-free image.
    pub base: RasterImage,
    /// `base` with a* raised by `boost` inside `truth`.
    pub original: RasterImage,
    pub truth: BinaryMask,
    /// Face-parsing ids: 1 (skin) inside a background border of id 0.
    pub labels: Vec<u8>,
}

impl SkinFixture {
    pub fn write_labels(&self, path: impl AsRef<Path>) {
        let (w, h) = self.base.dimensions();
        encode_gray_png(w, h, &self.labels, path).expect("write label map");
    }
}

pub const SKIN_BORDER: u32 = 4;

/// Textured skin tone plus freckles and darker features; `patches` elliptical
/// lesions in the central half with a* raised by `boost`.
pub fn skin_fixture(width: u32, height: u32, seed: u64, patches: usize, boost: f64) -> SkinFixture {
    let mut rng = rng(seed);
    let coarse = value_noise(&mut rng, width, height, 40.0);
    let fine = value_noise(&mut rng, width, height, 6.0);
    let tone = [196.0, 146.0, 124.0];
    let mut base = RasterImage::from_fn(width, height, |x, y| {
        let i = (y * width + x) as usize;
        let shade = 0.78 + 0.22 * coarse[i] + 0.12 * fine[i];
        tone.map(|t| (t * shade).round().clamp(0.0, 255.0) as u8)
    });
    let scale = (width.min(height) as f64 / 256.0).max(0.5);
    let count = (width as usize * height as usize) / 1200;
    let small = ((2.0 * scale) as u32).max(2);
    paint_shapes(&mut base, &mut rng, count, (small, small * 4), |u| {
        let d = 0.35 + 0.3 * u[0];
        tone.map(|t| (t * d) as u8)
    });
    let big = ((10.0 * scale) as u32).max(6);
    paint_shapes(&mut base, &mut rng, count / 12 + 4, (big, big * 3), |u| {
        let d = 0.2 + 0.25 * u[0];
        [60.0, 45.0, 40.0].map(|t: f64| (t * (1.0 + d)) as u8)
    });

    let mut truth = BinaryMask::filled(width, height, false);
    let (w, h) = (width as f64, height as f64);
    for _ in 0..patches {
        let cx = rng.random_range(0.3 * w..0.7 * w);
        let cy = rng.random_range(0.3 * h..0.7 * h);
        let rx = rng.random_range(0.04 * w..0.08 * w);
        let ry = rng.random_range(0.04 * h..0.08 * h);
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                if dx * dx + dy * dy <= 1.0 {
                    truth.set(x, y, true);
                }
            }
        }
    }
    let original = RasterImage::from_fn(width, height, |x, y| {
        let p = base.pixel(x, y);
        if truth.get(x, y) {
            boost_a_star(p, boost)
        } else {
            p
        }
    });
    let labels = (0..height)
        .flat_map(|y| {
            (0..width).map(move |x| {
                let inside = x >= SKIN_BORDER && y >= SKIN_BORDER && x + SKIN_BORDER < width && y + SKIN_BORDER < height;
                inside as u8
            })
        })
        .collect();
    SkinFixture {
        base,
        original,
        truth,
        labels,
    }
}

// ---------------------------------------------------------------------------
// Masks

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.as_slice().iter().zip(b.as_slice()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn random_mask(rng: &mut impl Rng, width: u32, height: u32, density: f64) -> BinaryMask {
    BinaryMask::from_fn(width, height, |_, _| rng.random_bool(density))
}
