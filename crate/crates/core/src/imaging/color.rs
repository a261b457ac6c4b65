//! sRGB → CIELAB (D65).
//!
//! Samples are decoded with the IEC 61966-2-1 transfer function, mapped to
//! XYZ with the sRGB/D65 matrix and normalized by the D65 white before the
//! CIE 1976 L*a*b* compander.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::RasterImage;

/// D65 reference white (2° observer), Y normalized to 1.
pub const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

// CIE exact rational forms of 0.008856 and 903.3.
const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

fn linear_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [0.0; 256];
        for (v, out) in lut.iter_mut().enumerate() {
            let c = v as f64 / 255.0;
            *out = if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            };
        }
        lut
    })
}

#[inline]
fn compand(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Converts one 8-bit sRGB triple to `[L*, a*, b*]`.
pub fn srgb_to_lab_pixel(rgb: [u8; 3]) -> [f32; 3] {
    let lut = linear_lut();
    let lin = [lut[rgb[0] as usize], lut[rgb[1] as usize], lut[rgb[2] as usize]];
    let mut f = [0.0; 3];
    for (i, row) in RGB_TO_XYZ.iter().enumerate() {
        let xyz = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
        f[i] = compand(xyz / D65_WHITE[i]);
    }
    [
        (116.0 * f[1] - 16.0) as f32,
        (500.0 * (f[0] - f[1])) as f32,
        (200.0 * (f[1] - f[2])) as f32,
    ]
}

/// Per-pixel CIELAB planes.
#[derive(Clone, PartialEq)]
pub struct LabImage {
    width: u32,
    height: u32,
    l: Vec<f32>,
    a: Vec<f32>,
    b: Vec<f32>,
}

impl std::fmt::Debug for LabImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LabImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl LabImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn l(&self) -> &[f32] {
        &self.l
    }

    pub fn a(&self) -> &[f32] {
        &self.a
    }

    pub fn b(&self) -> &[f32] {
        &self.b
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let i = y as usize * self.width as usize + x as usize;
        [self.l[i], self.a[i], self.b[i]]
    }
}

pub fn srgb_to_lab(image: &RasterImage) -> LabImage {
    let lab: Vec<[f32; 3]> = image
        .as_bytes()
        .par_chunks_exact(3)
        .map(|p| srgb_to_lab_pixel([p[0], p[1], p[2]]))
        .collect();
    let n = lab.len();
    let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for p in lab {
        l.push(p[0]);
        a.push(p[1]);
        b.push(p[2]);
    }
    LabImage {
        width: image.width(),
        height: image.height(),
        l,
        a,
        b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_and_black() {
        let w = srgb_to_lab_pixel([255, 255, 255]);
        assert!((w[0] - 100.0).abs() < 1e-3, "{w:?}");
        assert!(w[1].abs() < 1e-3 && w[2].abs() < 1e-3, "{w:?}");
        assert_eq!(srgb_to_lab_pixel([0, 0, 0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn gray_axis_is_neutral_and_monotone() {
        let mut prev = -1.0f32;
        for v in 0..=255u8 {
            let [l, a, b] = srgb_to_lab_pixel([v, v, v]);
            assert!(a.abs() <= 0.05 && b.abs() <= 0.05, "v={v} a={a} b={b}");
            if v > 0 {
                assert!(l > prev, "L not increasing at {v}");
            }
            prev = l;
        }
    }

    #[test]
    fn red_is_redder_than_green() {
        let red = srgb_to_lab_pixel([255, 0, 0]);
        let green = srgb_to_lab_pixel([0, 255, 0]);
        assert!(red[1] > 70.0 && green[1] < -70.0);
    }

    #[test]
    fn image_planes_match_pixel_fn() {
        let img = RasterImage::from_fn(4, 3, |x, y| [(x * 60) as u8, (y * 90) as u8, 33]);
        let lab = srgb_to_lab(&img);
        assert_eq!(lab.dimensions(), (4, 3));
        assert_eq!(lab.pixel(2, 1), srgb_to_lab_pixel(img.pixel(2, 1)));
    }
}
