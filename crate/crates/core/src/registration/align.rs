use serde::{Deserialize, Serialize};

use super::{
    central_crop_rect, compute_descriptors, detect_keypoints, match_descriptors, ransac_homography,
    warp_to, Descriptor, DetectorParams, Homography, Keypoint, Match, RansacParams, RegistrationError,
    DEFAULT_CROP_COVERAGE, DEFAULT_RATIO_MAX,
};
use crate::imaging::{mse, resize_bilinear, to_grayscale, RasterImage, Rect};
use crate::masking::{mask_and, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignParams {
    pub detector: DetectorParams,
    pub ratio_max: f32,
    pub ransac: RansacParams,
    /// Minimum valid fraction inside the central crop.
    pub crop_coverage: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        Self {
            detector: DetectorParams::default(),
            ratio_max: DEFAULT_RATIO_MAX,
            ransac: RansacParams::default(),
            crop_coverage: DEFAULT_CROP_COVERAGE,
        }
    }
}

/// Registered pair: the reference resampled onto the original's grid.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Maps reference coordinates to original coordinates.
    pub homography: Homography,
    pub warped_reference: RasterImage,
    /// Where the warped reference has full bilinear support.
    pub valid_mask: BinaryMask,
    pub crop_rect: Rect,
    /// Keypoints detected in the original.
    pub keypoints_a: usize,
    /// Keypoints detected in the reference.
    pub keypoints_b: usize,
    pub match_count: usize,
    pub inlier_count: usize,
    pub reprojection_rmse: f64,
    /// Original vs the reference naively resized to the original's size.
    pub mse_pre: f64,
    /// Original vs warped reference over `valid_mask ∩ crop_rect`.
    pub mse_post: f64,
}

impl AlignmentResult {
    /// Valid region restricted to the crop rectangle.
    pub fn analysis_region(&self) -> BinaryMask {
        let (w, h) = self.valid_mask.dimensions();
        mask_and(&self.valid_mask, &BinaryMask::from_rect(w, h, self.crop_rect))
            .expect("same dimensions")
    }
}

/// Keypoints that received a descriptor, paired with their descriptors.
pub fn describe_image(
    image: &RasterImage,
    params: &DetectorParams,
) -> Result<(Vec<Keypoint>, Vec<Descriptor>), RegistrationError> {
    let gray = to_grayscale(image);
    let kps = detect_keypoints(&gray, params)?;
    let set = compute_descriptors(&gray, &kps);
    let kept = set.indices.iter().map(|&i| kps[i]).collect();
    Ok((kept, set.descriptors))
}

fn failed(e: RegistrationError) -> RegistrationError {
    match e {
        RegistrationError::EmptyDescriptorList
        | RegistrationError::InsufficientPoints { .. }
        | RegistrationError::NoConsensus { .. }
        | RegistrationError::NoValidOverlap
        | RegistrationError::Degenerate(_) => RegistrationError::AlignmentFailed(e.to_string()),
        other => other,
    }
}

/// Registers `reference` onto `original`.
pub fn align(
    original: &RasterImage,
    reference: &RasterImage,
    params: &AlignParams,
) -> Result<AlignmentResult, RegistrationError> {
    let (kp_a, desc_a) = describe_image(original, &params.detector)?;
    let (kp_b, desc_b) = describe_image(reference, &params.detector)?;
    let matches = match_descriptors(&desc_a, &desc_b, params.ratio_max).map_err(failed)?;
    align_matched(original, reference, &kp_a, &kp_b, &matches, params)
}

/// The robust-fit half of [`align`]: RANSAC over given correspondences
/// (`a` = original, `b` = reference), warp, crop and MSE.
pub fn align_matched(
    original: &RasterImage,
    reference: &RasterImage,
    kp_a: &[Keypoint],
    kp_b: &[Keypoint],
    matches: &[Match],
    params: &AlignParams,
) -> Result<AlignmentResult, RegistrationError> {
    let outcome = ransac_homography(matches, kp_a, kp_b, &params.ransac).map_err(failed)?;

    let (w, h) = original.dimensions();
    let (warped, valid) = warp_to(reference, &outcome.homography, w, h).map_err(failed)?;
    let crop_rect = central_crop_rect(&valid, params.crop_coverage).map_err(failed)?;
    let region = mask_and(&valid, &BinaryMask::from_rect(w, h, crop_rect)).expect("same dimensions");

    let mse_pre = mse(original, &resize_bilinear(reference, w, h), None)?;
    let mse_post = mse(original, &warped, Some(&region)).map_err(|e| failed(e.into()))?;

    Ok(AlignmentResult {
        homography: outcome.homography,
        warped_reference: warped,
        valid_mask: valid,
        crop_rect,
        keypoints_a: kp_a.len(),
        keypoints_b: kp_b.len(),
        match_count: matches.len(),
        inlier_count: outcome.inliers.len(),
        reprojection_rmse: outcome.rmse,
        mse_pre,
        mse_post,
    })
}
