//! End-to-end orchestration: configuration, the synthesizer adapter, the
//! staged run and its JSON report.
//!
//! Every failure carries the [`Stage`] it came from. The stage determines
//! the process exit code used by the command-line front end:
//!
//! | stage        | exit code |
//! |--------------|-----------|
//! | config       | 1         |
//! | io           | 2         |
//! | adapter      | 3         |
//! | alignment    | 4         |
//! | masking      | 5         |
//! | segmentation | 6         |

mod adapter;
mod config;
mod report;
mod run;

use std::fmt;

use thiserror::Error;

pub use adapter::{
    invoke_synthesizer, resolve_adapter_command, AdapterError, SynthOutput, SynthRequest,
    SynthResponse, ADAPTER_ENV, MANIFEST_VERSION, REQUEST_FILE, RESPONSE_FILE,
};
pub use config::{
    AdapterConfig, PipelineConfig, SegmentParams, DEFAULT_EDIT_PROMPT, DEFAULT_GUIDANCE_SCALE,
    DEFAULT_HISTOGRAM_BINS, DEFAULT_SOURCE_PROMPT, DEFAULT_STEPS,
};
pub use report::{
    AdapterProvenance, AlignmentSummary, Report, SegmentationSummary, ThresholdSummary, Timestamps,
    SCHEMA_VERSION,
};
pub use run::{
    apply_threshold, artifact, run_align, run_alignment, run_histogram, run_pipeline, run_segment,
    run_synth, segment, skin_mask, write_alignment_artifacts, write_segmentation_artifacts,
    write_threshold_artifacts, Segmentation, Thresholded,
};

use crate::erythema::ErythemaError;
use crate::imaging::ImagingError;
use crate::masking::MaskError;
use crate::registration::RegistrationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Config,
    Io,
    Adapter,
    Alignment,
    Masking,
    Segmentation,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 1,
            Stage::Io => 2,
            Stage::Adapter => 3,
            Stage::Alignment => 4,
            Stage::Masking => 5,
            Stage::Segmentation => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Io => "io",
            Stage::Adapter => "adapter",
            Stage::Alignment => "alignment",
            Stage::Masking => "masking",
            Stage::Segmentation => "segmentation",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("{stage} error: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Stage::Config, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

impl From<ImagingError> for PipelineError {
    fn from(e: ImagingError) -> Self {
        Self::new(Stage::Io, e.to_string())
    }
}

impl From<AdapterError> for PipelineError {
    fn from(e: AdapterError) -> Self {
        Self::new(Stage::Adapter, e.to_string())
    }
}

impl From<RegistrationError> for PipelineError {
    fn from(e: RegistrationError) -> Self {
        Self::new(Stage::Alignment, e.to_string())
    }
}

impl From<MaskError> for PipelineError {
    fn from(e: MaskError) -> Self {
        match e {
            MaskError::Image(e @ (ImagingError::NotFound { .. } | ImagingError::Io { .. })) => e.into(),
            other => Self::new(Stage::Masking, other.to_string()),
        }
    }
}

impl From<ErythemaError> for PipelineError {
    fn from(e: ErythemaError) -> Self {
        match e {
            ErythemaError::Image(e) => e.into(),
            other => Self::new(Stage::Segmentation, other.to_string()),
        }
    }
}
