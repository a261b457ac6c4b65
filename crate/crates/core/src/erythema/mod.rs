//! ΔA* difference maps, μ + kσ thresholding and rendered artifacts.

mod delta;
mod dmap;
mod histogram;
mod render;
mod threshold;

use thiserror::Error;

pub use delta::{channel_difference_means, delta_a, delta_stats, DeltaMap, DeltaStats};
pub use dmap::{load_delta_map, save_delta_map};
pub use histogram::{histogram, render_histogram, write_histogram_csv, HistogramData};
pub use render::{render_heatmap, render_overlay, NEUTRAL_GRAY};
pub use threshold::{postprocess, threshold_mask, PostprocessParams, DEFAULT_K};

use crate::imaging::ImagingError;
use crate::masking::MaskError;

#[derive(Debug, Error)]
pub enum ErythemaError {
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (u32, u32), b: (u32, u32) },
    #[error("analysis domain is empty")]
    EmptyDomain,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}: invalid delta map file: {detail}")]
    InvalidDeltaMap { path: String, detail: String },
    #[error(transparent)]
    Image(#[from] ImagingError),
    #[error(transparent)]
    Mask(#[from] MaskError),
}
