//! Zero-shot erythema segmentation.
//!
//! The pipeline compares a photo against an erythema-free reference of the
//! same subject. The reference is registered onto the photo with a robust
//! homography, both images are converted to CIELAB, and pixels whose a*
//! (red–green) difference is statistically large within the skin region are
//! reported as erythema.
//!
//! Stages live in their own modules:
//!
//! - [`imaging`]: raster buffers, PNG/JPEG I/O, grayscale, sRGB→CIELAB, MSE.
//! - [`registration`]: keypoints, binary descriptors, matching, DLT/RANSAC
//!   homography, warping and overlap cropping.
//! - [`masking`]: face-parsing label maps, skin selection, mask algebra and
//!   morphology.
//! - [`erythema`]: ΔA* maps, μ + kσ thresholding, cleanup, histograms and
//!   rendered artifacts.
//! - [`pipeline`]: configuration, the external synthesizer adapter, the
//!   end-to-end run and its JSON report.

pub mod erythema;
pub mod imaging;
pub mod masking;
pub mod pipeline;
pub mod registration;

pub use erythema::{DeltaMap, DeltaStats, HistogramData};
pub use imaging::{GrayImage, LabImage, RasterImage, Rect};
pub use masking::{BinaryMask, ClassMap, LabelMask};
pub use registration::{AlignmentResult, Homography, Keypoint};
