//! Feature-based registration of the reference onto the original.
//!
//! `align` chains grayscale → corner detection → oriented binary descriptors
//! → mutual-best matching → RANSAC homography → inverse warp → central crop.

mod align;
mod crop;
mod descriptor;
mod features;
mod homography;
mod matching;
mod ransac;
mod warp;

use thiserror::Error;

pub use align::{align, align_matched, describe_image, AlignParams, AlignmentResult};
pub use crop::{central_crop, central_crop_rect, CropResult, DEFAULT_CROP_COVERAGE};
pub use descriptor::{compute_descriptors, Descriptor, DescriptorSet, PATTERN_RADIUS};
pub use features::{
    detect_keypoints, keypoint_orientation, DetectorParams, Keypoint, KEYPOINT_MARGIN,
};
pub use homography::{estimate_homography_dlt, Homography, PointPair};
pub use matching::{hamming, match_descriptors, Match, DEFAULT_RATIO_MAX};
pub use ransac::{ransac_homography, ransac_homography_pairs, RansacOutcome, RansacParams};
pub use warp::warp_to;

use crate::imaging::ImagingError;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("image {width}x{height} is too small for the detector footprint (need at least {min}x{min})")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("descriptor list is empty")]
    EmptyDescriptorList,
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("degenerate point configuration: {0}")]
    Degenerate(String),
    #[error("no consensus: best hypothesis has {inliers} inliers (need 4)")]
    NoConsensus { inliers: usize },
    #[error("homography is singular")]
    SingularHomography,
    #[error("warped reference has no valid overlap with the original")]
    NoValidOverlap,
    #[error("alignment failed: {0}")]
    AlignmentFailed(String),
    #[error(transparent)]
    Image(#[from] ImagingError),
}
