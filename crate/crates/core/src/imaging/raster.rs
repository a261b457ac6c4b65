use std::fs;
use std::io::{BufWriter, ErrorKind};
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType as PngFilter, PngEncoder};
use image::{ColorType, DynamicImage, ImageEncoder, ImageFormat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ImagingError, Rect};

/// 8-bit sRGB image, row-major, three interleaved samples per pixel.
///
/// Alpha is dropped when decoding; see [`LoadInfo::had_alpha`].
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidBuffer(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * Self::CHANNELS;
        if data.len() != expected {
            return Err(ImagingError::InvalidBuffer(format!(
                "expected {expected} bytes for {width}x{height} RGB, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * Self::CHANNELS)
            .collect();
        Self { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut data = Vec::with_capacity(width as usize * height as usize * Self::CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
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

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        let i = (y as usize * self.width as usize + x as usize) * Self::CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        let i = (y as usize * self.width as usize + x as usize) * Self::CHANNELS;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    /// Iterates pixels in row-major order.
    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    pub fn crop(&self, rect: Rect) -> Result<Self, ImagingError> {
        if !rect.fits_within(self.width, self.height) {
            return Err(ImagingError::InvalidBuffer(format!(
                "crop {rect:?} outside {}x{}",
                self.width, self.height
            )));
        }
        let row = self.width as usize * 3;
        let mut data = Vec::with_capacity(rect.area() as usize * 3);
        for y in rect.y..rect.y + rect.height {
            let start = y as usize * row + rect.x as usize * 3;
            data.extend_from_slice(&self.data[start..start + rect.width as usize * 3]);
        }
        Self::new(rect.width, rect.height, data)
    }
}

/// Single-channel luminance image with values in `[0, 255]`.
#[derive(Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize {
            return Err(ImagingError::InvalidBuffer(format!(
                "gray buffer of {} values does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
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
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Bilinear sample at a sub-pixel position; `None` without full support.
    #[inline]
    pub fn sample_bilinear(&self, x: f32, y: f32) -> Option<f32> {
        if !(x >= 0.0 && y >= 0.0) {
            return None;
        }
        let x0 = x.floor() as u32;
        let y0 = y.floor() as u32;
        if x0 + 1 >= self.width || y0 + 1 >= self.height {
            return None;
        }
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let w = self.width as usize;
        let i = y0 as usize * w + x0 as usize;
        let top = self.data[i] * (1.0 - fx) + self.data[i + 1] * fx;
        let bottom = self.data[i + w] * (1.0 - fx) + self.data[i + w + 1] * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }
}

/// Container format of a decoded file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Png,
    Jpeg,
}

/// What was discarded or expanded while decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadInfo {
    pub format: SourceFormat,
    pub had_alpha: bool,
    pub was_grayscale: bool,
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage, ImagingError> {
    load_image_with_info(path).map(|(img, _)| img)
}

/// Decodes an 8-bit PNG or baseline JPEG as sRGB.
///
/// 16-bit and palette PNGs are rejected. Gray inputs are expanded to RGB.
pub fn load_image_with_info(
    path: impl AsRef<Path>,
) -> Result<(RasterImage, LoadInfo), ImagingError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let format = match image::guess_format(&bytes) {
        Ok(ImageFormat::Png) => SourceFormat::Png,
        Ok(ImageFormat::Jpeg) => SourceFormat::Jpeg,
        Ok(other) => {
            return Err(ImagingError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("{other:?} input is not accepted (PNG or JPEG only)"),
            })
        }
        Err(_) => {
            return Err(ImagingError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "unrecognized file signature".into(),
            })
        }
    };
    if format == SourceFormat::Png {
        check_png_header(path, &bytes)?;
    }
    let image_format = match format {
        SourceFormat::Png => ImageFormat::Png,
        SourceFormat::Jpeg => ImageFormat::Jpeg,
    };
    let decoded = image::load_from_memory_with_format(&bytes, image_format).map_err(|e| {
        ImagingError::Corrupt {
            path: path.to_path_buf(),
            detail: e.to_string(),
        }
    })?;
    let color = decoded.color();
    let info = LoadInfo {
        format,
        had_alpha: color.has_alpha(),
        was_grayscale: !color.has_color(),
    };
    let rgb = match decoded {
        DynamicImage::ImageRgb8(img) => img,
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            decoded.to_rgb8()
        }
        other => {
            return Err(ImagingError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("{:?} samples are not 8-bit", other.color()),
            })
        }
    };
    let (w, h) = rgb.dimensions();
    let img = RasterImage::new(w, h, rgb.into_raw())?;
    Ok((img, info))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, ImagingError> {
    fs::read(path).map_err(|source| match source.kind() {
        ErrorKind::NotFound => ImagingError::NotFound {
            path: path.to_path_buf(),
        },
        _ => ImagingError::Io {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// PNG bit depth and color type straight from IHDR. The decoder silently
/// expands palettes, so they have to be caught before decoding.
pub(crate) fn png_header(bytes: &[u8]) -> Option<(u8, u8)> {
    if bytes.len() < 29 || &bytes[12..16] != b"IHDR" {
        return None;
    }
    Some((bytes[24], bytes[25]))
}

fn check_png_header(path: &Path, bytes: &[u8]) -> Result<(), ImagingError> {
    let (depth, color_type) = png_header(bytes).ok_or_else(|| ImagingError::Corrupt {
        path: path.to_path_buf(),
        detail: "missing IHDR chunk".into(),
    })?;
    if color_type == 3 {
        return Err(ImagingError::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "indexed-color PNG".into(),
        });
    }
    if depth != 8 {
        return Err(ImagingError::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("{depth}-bit PNG (8-bit required)"),
        });
    }
    Ok(())
}

fn write_png(
    path: &Path,
    data: &[u8],
    width: u32,
    height: u32,
    color: ColorType,
) -> Result<(), ImagingError> {
    let io_err = |source: std::io::Error| ImagingError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let encoder = PngEncoder::new_with_quality(
        BufWriter::new(file),
        CompressionType::Fast,
        PngFilter::Adaptive,
    );
    encoder
        .write_image(data, width, height, color.into())
        .map_err(|e| match e {
            image::ImageError::IoError(source) => io_err(source),
            other => io_err(std::io::Error::other(other.to_string())),
        })
}

/// Writes a lossless 8-bit RGB PNG.
pub fn encode_png(image: &RasterImage, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    write_png(
        path.as_ref(),
        image.as_bytes(),
        image.width,
        image.height,
        ColorType::Rgb8,
    )
}

/// Writes a single-channel 8-bit PNG.
pub fn encode_gray_png(
    width: u32,
    height: u32,
    data: &[u8],
    path: impl AsRef<Path>,
) -> Result<(), ImagingError> {
    if width == 0 || height == 0 || data.len() != width as usize * height as usize {
        return Err(ImagingError::InvalidBuffer(format!(
            "gray buffer of {} bytes does not match {width}x{height}",
            data.len()
        )));
    }
    write_png(path.as_ref(), data, width, height, ColorType::L8)
}

const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// BT.601 luma on the 0–255 scale.
pub fn to_grayscale(image: &RasterImage) -> GrayImage {
    let data = image
        .as_bytes()
        .par_chunks_exact(3)
        .map(|p| {
            LUMA_WEIGHTS[0] * p[0] as f32 + LUMA_WEIGHTS[1] * p[1] as f32 + LUMA_WEIGHTS[2] * p[2] as f32
        })
        .collect();
    GrayImage {
        width: image.width,
        height: image.height,
        data,
    }
}

/// Bilinear resize with pixel-center alignment.
pub fn resize_bilinear(image: &RasterImage, width: u32, height: u32) -> RasterImage {
    assert!(width > 0 && height > 0, "zero-sized resize target");
    if image.dimensions() == (width, height) {
        return image.clone();
    }
    let sx = image.width as f64 / width as f64;
    let sy = image.height as f64 / height as f64;
    let max_x = (image.width - 1) as f64;
    let max_y = (image.height - 1) as f64;
    let mut data = vec![0u8; width as usize * height as usize * 3];
    data.par_chunks_exact_mut(width as usize * 3)
        .enumerate()
        .for_each(|(y, row)| {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let y0 = fy.floor() as u32;
            let y1 = (y0 + 1).min(image.height - 1);
            let ty = fy - y0 as f64;
            for x in 0..width as usize {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                let x0 = fx.floor() as u32;
                let x1 = (x0 + 1).min(image.width - 1);
                let tx = fx - x0 as f64;
                let (p00, p10) = (image.pixel(x0, y0), image.pixel(x1, y0));
                let (p01, p11) = (image.pixel(x0, y1), image.pixel(x1, y1));
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - tx) + p10[c] as f64 * tx;
                    let bottom = p01[c] as f64 * (1.0 - tx) + p11[c] as f64 * tx;
                    row[x * 3 + c] = quantize(top * (1.0 - ty) + bottom * ty);
                }
            }
        });
    RasterImage {
        width,
        height,
        data,
    }
}

/// Round-half-up to a u8 sample.
#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}
