//! Image buffers, codecs, color conversion and pixel metrics.

mod color;
mod metrics;
mod raster;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use color::{srgb_to_lab, srgb_to_lab_pixel, LabImage, D65_WHITE};
pub use metrics::mse;
pub use raster::{
    encode_gray_png, encode_png, load_image, load_image_with_info, resize_bilinear, to_grayscale,
    GrayImage, LoadInfo, RasterImage, SourceFormat,
};
pub(crate) use raster::{png_header as png_ihdr, quantize, read_file as read_file_bytes};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("{}: file not found", .path.display())]
    NotFound { path: PathBuf },
    #[error("{}: unsupported format: {detail}", .path.display())]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("{}: corrupt image stream: {detail}", .path.display())]
    Corrupt { path: PathBuf, detail: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid image buffer: {0}")]
    InvalidBuffer(String),
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (u32, u32), b: (u32, u32) },
    #[error("mask selects no pixels")]
    EmptyMask,
}

/// Axis-aligned pixel rectangle, `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self { x, y, width, height }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self::new(0, 0, width, height)
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }

    /// True when the rectangle is non-empty and lies inside a `width × height` grid.
    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.width > 0
            && self.height > 0
            && self.x as u64 + self.width as u64 <= width as u64
            && self.y as u64 + self.height as u64 <= height as u64
    }
}
