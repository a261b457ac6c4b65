use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError, Stage};
use crate::erythema::DeltaStats;
use crate::imaging::Rect;
use crate::registration::{AlignmentResult, Homography};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub elapsed_s: f64,
}

impl Timestamps {
    pub fn since(started: DateTime<Utc>) -> Self {
        let finished = Utc::now();
        Self {
            started,
            finished,
            elapsed_s: (finished - started).num_microseconds().unwrap_or(0) as f64 / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub keypoints_a: usize,
    pub keypoints_b: usize,
    pub match_count: usize,
    pub inlier_count: usize,
    pub reprojection_rmse: f64,
    pub mse_pre: f64,
    pub mse_post: f64,
    pub crop_rect: Rect,
    /// Maps reference pixel coordinates onto the original.
    pub homography: Homography,
}

impl From<&AlignmentResult> for AlignmentSummary {
    fn from(r: &AlignmentResult) -> Self {
        Self {
            keypoints_a: r.keypoints_a,
            keypoints_b: r.keypoints_b,
            match_count: r.match_count,
            inlier_count: r.inlier_count,
            reprojection_rmse: r.reprojection_rmse,
            mse_pre: r.mse_pre,
            mse_post: r.mse_post,
            crop_rect: r.crop_rect,
            homography: r.homography,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub mu: f64,
    pub sigma: f64,
    pub k: f64,
    pub tau: f64,
    pub domain_pixels: usize,
    pub mask_pixels: usize,
    pub mask_area_fraction: f64,
}

impl ThresholdSummary {
    pub fn new(stats: &DeltaStats, mask_pixels: usize) -> Self {
        Self {
            mu: stats.mu,
            sigma: stats.sigma,
            k: stats.k,
            tau: stats.tau,
            domain_pixels: stats.n,
            mask_pixels,
            mask_area_fraction: mask_pixels as f64 / stats.n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationSummary {
    #[serde(flatten)]
    pub threshold: ThresholdSummary,
    pub delta_l_mean: f64,
    pub delta_b_mean: f64,
}

/// What the synthesizer was asked for and what it reported back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterProvenance {
    pub command: String,
    pub source_prompt: String,
    pub edit_prompt: String,
    pub steps: u32,
    pub guidance_scale: f64,
    pub seed: u64,
    pub reference: PathBuf,
    pub labelmask: PathBuf,
    pub model_ids: serde_json::Value,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub timestamps: Timestamps,
    pub config: PipelineConfig,
    #[serde(flatten)]
    pub alignment: AlignmentSummary,
    #[serde(flatten)]
    pub segmentation: SegmentationSummary,
    /// Artifact name → file name inside the output directory.
    pub artifacts: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adapter: Option<AdapterProvenance>,
}

impl Report {
    /// Checks the count and area-fraction invariants.
    pub fn check(&self) -> Result<(), String> {
        let t = &self.segmentation.threshold;
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("unexpected schema version {}", self.schema_version));
        }
        if t.mask_pixels > t.domain_pixels {
            return Err(format!("mask_pixels {} > domain_pixels {}", t.mask_pixels, t.domain_pixels));
        }
        if t.domain_pixels == 0 || t.mask_area_fraction != t.mask_pixels as f64 / t.domain_pixels as f64 {
            return Err("mask_area_fraction does not equal mask_pixels / domain_pixels".into());
        }
        if t.tau != t.mu + t.k * t.sigma {
            return Err("tau does not equal mu + k * sigma".into());
        }
        if self.alignment.inlier_count > self.alignment.match_count {
            return Err("more inliers than matches".into());
        }
        Ok(())
    }
}

/// Pretty-printed JSON with a trailing newline.
pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::new(Stage::Io, format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::new(Stage::Io, format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let stats = DeltaStats {
            mu: 2.5,
            sigma: 0.5,
            k: 1.5,
            tau: 3.25,
            n: 200,
        };
        let started = Utc::now();
        Report {
            schema_version: SCHEMA_VERSION,
            timestamps: Timestamps::since(started),
            config: PipelineConfig::default(),
            alignment: AlignmentSummary {
                keypoints_a: 10,
                keypoints_b: 12,
                match_count: 8,
                inlier_count: 6,
                reprojection_rmse: 0.3,
                mse_pre: 40.0,
                mse_post: 2.0,
                crop_rect: Rect::new(1, 2, 30, 40),
                homography: Homography::identity(),
            },
            segmentation: SegmentationSummary {
                threshold: ThresholdSummary::new(&stats, 50),
                delta_l_mean: 0.1,
                delta_b_mean: -0.2,
            },
            artifacts: BTreeMap::from([("report".to_string(), "report.json".to_string())]),
            adapter: None,
        }
    }

    #[test]
    fn flat_field_names() {
        let v = serde_json::to_value(sample()).unwrap();
        for key in [
            "schema_version",
            "timestamps",
            "config",
            "keypoints_a",
            "keypoints_b",
            "match_count",
            "inlier_count",
            "reprojection_rmse",
            "mse_pre",
            "mse_post",
            "crop_rect",
            "homography",
            "mu",
            "sigma",
            "k",
            "tau",
            "domain_pixels",
            "mask_pixels",
            "mask_area_fraction",
            "delta_l_mean",
            "delta_b_mean",
            "artifacts",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v.get("adapter").is_none());
        assert_eq!(v["mask_area_fraction"], 0.25);
    }

    #[test]
    fn round_trip_and_check() {
        let r = sample();
        r.check().unwrap();
        let back: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let mut bad = r.clone();
        bad.segmentation.threshold.mask_pixels = 500;
        assert!(bad.check().is_err());
    }
}
