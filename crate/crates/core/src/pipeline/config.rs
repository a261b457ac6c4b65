use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::erythema::{PostprocessParams, DEFAULT_K};
use crate::registration::{AlignParams, RansacParams, DEFAULT_RATIO_MAX};

pub const DEFAULT_SOURCE_PROMPT: &str = "a photograph of a person with red, inflamed skin showing erythema";
pub const DEFAULT_EDIT_PROMPT: &str = "a photograph of a person with clear skin, no redness or rash";
pub const DEFAULT_STEPS: u32 = 50;
pub const DEFAULT_GUIDANCE_SCALE: f64 = 7.5;
pub const DEFAULT_HISTOGRAM_BINS: usize = 64;

/// Settings for the external reference synthesizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    /// Program plus leading arguments, split on whitespace. The manifest path
    /// is appended as the final argument.
    pub command: Option<String>,
    pub source_prompt: String,
    pub edit_prompt: String,
    pub steps: u32,
    pub guidance_scale: f64,
    pub seed: u64,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            command: None,
            source_prompt: DEFAULT_SOURCE_PROMPT.into(),
            edit_prompt: DEFAULT_EDIT_PROMPT.into(),
            steps: DEFAULT_STEPS,
            guidance_scale: DEFAULT_GUIDANCE_SCALE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub reference_path: Option<PathBuf>,
    pub labelmask_path: Option<PathBuf>,
    /// Class map for `labelmask_path`; the bundled face-parsing table when absent.
    pub class_map_path: Option<PathBuf>,
    pub use_skin_mask: bool,
    pub k: f64,
    pub ratio_max: f32,
    pub inlier_px: f64,
    pub ransac_iters: usize,
    pub seed: u64,
    pub open_radius: u32,
    pub close_radius: u32,
    pub min_area_fraction: f64,
    pub histogram_bins: usize,
    pub overlay_color: [u8; 3],
    pub overlay_alpha: f32,
    pub out_dir: PathBuf,
    pub adapter: AdapterConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_path: PathBuf::new(),
            reference_path: None,
            labelmask_path: None,
            class_map_path: None,
            use_skin_mask: true,
            k: DEFAULT_K,
            ratio_max: DEFAULT_RATIO_MAX,
            inlier_px: RansacParams::default().inlier_px,
            ransac_iters: RansacParams::default().max_iters,
            seed: 0,
            open_radius: PostprocessParams::DEFAULT_OPEN_RADIUS,
            close_radius: PostprocessParams::DEFAULT_CLOSE_RADIUS,
            min_area_fraction: PostprocessParams::DEFAULT_MIN_AREA_FRACTION,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            overlay_color: [255, 0, 0],
            overlay_alpha: 0.4,
            out_dir: PathBuf::from("out"),
            adapter: AdapterConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config file. Missing fields take their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |msg: String| Err(PipelineError::config(msg));
        if self.input_path.as_os_str().is_empty() {
            return fail("input path is required".into());
        }
        if self.out_dir.as_os_str().is_empty() {
            return fail("output directory is required".into());
        }
        if !self.k.is_finite() {
            return fail(format!("k must be finite, got {}", self.k));
        }
        if !(0.0..=1.0).contains(&self.overlay_alpha) {
            return fail(format!("overlay alpha must be in [0, 1], got {}", self.overlay_alpha));
        }
        if !(self.ratio_max > 0.0 && self.ratio_max <= 1.0) {
            return fail(format!("ratio max must be in (0, 1], got {}", self.ratio_max));
        }
        if !(self.inlier_px.is_finite() && self.inlier_px > 0.0) {
            return fail(format!("inlier threshold must be positive, got {}", self.inlier_px));
        }
        if self.ransac_iters == 0 {
            return fail("ransac iterations must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.min_area_fraction) {
            return fail(format!("min area fraction must be in [0, 1), got {}", self.min_area_fraction));
        }
        if self.histogram_bins == 0 {
            return fail("histogram bins must be at least 1".into());
        }
        if self.adapter.steps == 0 {
            return fail("adapter steps must be at least 1".into());
        }
        if !(self.adapter.guidance_scale.is_finite() && self.adapter.guidance_scale >= 0.0) {
            return fail(format!("guidance scale must be ≥ 0, got {}", self.adapter.guidance_scale));
        }
        Ok(())
    }

    pub fn align_params(&self) -> AlignParams {
        let defaults = AlignParams::default();
        AlignParams {
            ratio_max: self.ratio_max,
            ransac: RansacParams {
                inlier_px: self.inlier_px,
                max_iters: self.ransac_iters,
                seed: self.seed,
                ..defaults.ransac
            },
            ..defaults
        }
    }

    pub fn segment_params(&self) -> SegmentParams {
        SegmentParams {
            k: self.k,
            open_radius: self.open_radius,
            close_radius: self.close_radius,
            min_area_fraction: self.min_area_fraction,
            histogram_bins: self.histogram_bins,
            overlay_color: self.overlay_color,
            overlay_alpha: self.overlay_alpha,
        }
    }
}

/// Parameters of the ΔA thresholding stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub k: f64,
    pub open_radius: u32,
    pub close_radius: u32,
    pub min_area_fraction: f64,
    pub histogram_bins: usize,
    pub overlay_color: [u8; 3],
    pub overlay_alpha: f32,
}

impl Default for SegmentParams {
    fn default() -> Self {
        PipelineConfig::default().segment_params()
    }
}

impl SegmentParams {
    pub fn postprocess(&self, domain_pixels: usize) -> PostprocessParams {
        PostprocessParams {
            open_radius: self.open_radius,
            close_radius: self.close_radius,
            ..PostprocessParams::for_domain(domain_pixels, self.min_area_fraction)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid() -> PipelineConfig {
        PipelineConfig {
            input_path: "a.png".into(),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_validate() {
        valid().validate().unwrap();
        let c = PipelineConfig::default();
        assert_eq!(c.k, 1.5);
        assert_eq!(c.adapter.steps, 50);
        assert_eq!(c.adapter.edit_prompt, DEFAULT_EDIT_PROMPT);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            PipelineConfig { k: f64::INFINITY, ..valid() },
            PipelineConfig { overlay_alpha: 1.5, ..valid() },
            PipelineConfig { input_path: PathBuf::new(), ..valid() },
            PipelineConfig { ransac_iters: 0, ..valid() },
            PipelineConfig { histogram_bins: 0, ..valid() },
        ] {
            let err = bad.validate().unwrap_err();
            assert_eq!(err.exit_code(), 1, "{err}");
        }
    }

    #[test]
    fn partial_json_takes_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"input_path": "x.png", "k": 2.0, "adapter": {"steps": 10}}"#).unwrap();
        assert_eq!(c.k, 2.0);
        assert_eq!(c.adapter.steps, 10);
        assert_eq!(c.adapter.guidance_scale, DEFAULT_GUIDANCE_SCALE);
        assert_eq!(c.open_radius, 1);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"kk": 1}"#).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = valid();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
