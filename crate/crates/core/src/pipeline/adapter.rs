//! Subprocess contract with the reference synthesizer.
//!
//! A request manifest is written to `<out_dir>/request.json` and the adapter
//! is run as `<command...> <manifest-path>`. On success it leaves a response
//! manifest at `<out_dir>/response.json` whose paths may be absolute or
//! relative to `out_dir`.

use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AdapterConfig;

pub const ADAPTER_ENV: &str = "ERYSEGM_ADAPTER";
pub const MANIFEST_VERSION: u32 = 1;
pub const REQUEST_FILE: &str = "request.json";
pub const RESPONSE_FILE: &str = "response.json";

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("no adapter configured (set --adapter or {ADAPTER_ENV})")]
    NotConfigured,
    #[error("adapter not found: {command}")]
    NotFound { command: String },
    #[error("adapter {command} exited with {status}: {stderr}")]
    NonzeroExit {
        command: String,
        status: String,
        stderr: String,
    },
    #[error("{}: invalid manifest: {detail}", .path.display())]
    ManifestInvalid { path: PathBuf, detail: String },
    #[error("adapter output missing: {}", .path.display())]
    OutputMissing { path: PathBuf },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRequest {
    pub version: u32,
    pub input: PathBuf,
    pub tasks: Vec<String>,
    pub source_prompt: String,
    pub edit_prompt: String,
    pub steps: u32,
    pub guidance_scale: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl SynthRequest {
    pub const TASKS: [&'static str; 2] = ["synthesize", "parse_face"];

    pub fn new(config: &AdapterConfig, input: &Path, out_dir: &Path) -> Self {
        Self {
            version: MANIFEST_VERSION,
            input: input.to_path_buf(),
            tasks: Self::TASKS.iter().map(|t| t.to_string()).collect(),
            source_prompt: config.source_prompt.clone(),
            edit_prompt: config.edit_prompt.clone(),
            steps: config.steps,
            guidance_scale: config.guidance_scale,
            seed: config.seed,
            out_dir: out_dir.to_path_buf(),
        }
    }

    /// Contract checks an adapter applies before doing any work.
    pub fn validate(&self) -> Result<(), String> {
        if self.version != MANIFEST_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        if self.tasks.is_empty() {
            return Err("tasks must not be empty".into());
        }
        if let Some(t) = self.tasks.iter().find(|t| !Self::TASKS.contains(&t.as_str())) {
            return Err(format!("unknown task {t:?}"));
        }
        if self.steps == 0 {
            return Err("steps must be at least 1".into());
        }
        if !(self.guidance_scale.is_finite() && self.guidance_scale >= 0.0) {
            return Err(format!("guidance_scale must be ≥ 0, got {}", self.guidance_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthResponse {
    pub version: u32,
    pub reference: PathBuf,
    pub labelmask: PathBuf,
    pub class_map: PathBuf,
    #[serde(default)]
    pub model_ids: serde_json::Value,
    pub elapsed_s: f64,
}

/// Validated adapter outputs with paths resolved against the request directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub reference: PathBuf,
    pub labelmask: PathBuf,
    pub class_map: PathBuf,
    pub response: SynthResponse,
    pub command: String,
}

/// The environment variable wins over the configured command.
pub fn resolve_adapter_command(config: &AdapterConfig) -> Option<String> {
    std::env::var(ADAPTER_ENV)
        .ok()
        .filter(|c| !c.trim().is_empty())
        .or_else(|| config.command.clone().filter(|c| !c.trim().is_empty()))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AdapterError + '_ {
    move |source| AdapterError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs the adapter for `input`, writing manifests and outputs under `out_dir`.
pub fn invoke_synthesizer(config: &AdapterConfig, input: &Path, out_dir: &Path) -> Result<SynthOutput, AdapterError> {
    let command = resolve_adapter_command(config).ok_or(AdapterError::NotConfigured)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let out_dir = out_dir.canonicalize().map_err(io_err(out_dir))?;
    let input = input.canonicalize().map_err(io_err(input))?;

    let request_path = out_dir.join(REQUEST_FILE);
    let response_path = out_dir.join(RESPONSE_FILE);
    if response_path.exists() {
        std::fs::remove_file(&response_path).map_err(io_err(&response_path))?;
    }
    let request = SynthRequest::new(config, &input, &out_dir);
    let text = serde_json::to_string_pretty(&request).expect("request serializes");
    std::fs::write(&request_path, text).map_err(io_err(&request_path))?;

    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or(AdapterError::NotConfigured)?;
    let output = Command::new(program)
        .args(parts)
        .arg(&request_path)
        .output()
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound | ErrorKind::PermissionDenied => AdapterError::NotFound {
                command: command.clone(),
            },
            _ => AdapterError::Io {
                path: PathBuf::from(program),
                source: e,
            },
        })?;
    if !output.status.success() {
        return Err(AdapterError::NonzeroExit {
            command,
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }

    if !response_path.is_file() {
        return Err(AdapterError::OutputMissing { path: response_path });
    }
    let text = std::fs::read_to_string(&response_path).map_err(io_err(&response_path))?;
    let invalid = |detail: String| AdapterError::ManifestInvalid {
        path: response_path.clone(),
        detail,
    };
    let response: SynthResponse = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
    if response.version != MANIFEST_VERSION {
        return Err(invalid(format!("unsupported version {}", response.version)));
    }
    if !(response.elapsed_s.is_finite() && response.elapsed_s >= 0.0) {
        return Err(invalid(format!("elapsed_s must be ≥ 0, got {}", response.elapsed_s)));
    }

    let resolve = |p: &Path| -> Result<PathBuf, AdapterError> {
        let full = out_dir.join(p);
        if full.is_file() {
            Ok(full)
        } else {
            Err(AdapterError::OutputMissing { path: full })
        }
    };
    let reference = resolve(&response.reference)?;
    let labelmask = resolve(&response.labelmask)?;
    let class_map = resolve(&response.class_map)?;
    match image::image_dimensions(&reference) {
        Ok((w, h)) if w > 0 && h > 0 => {}
        Ok(_) => return Err(invalid("reference image has zero size".into())),
        Err(e) => return Err(invalid(format!("reference {}: {e}", reference.display()))),
    }

    Ok(SynthOutput {
        reference,
        labelmask,
        class_map,
        response,
        command,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_shape() {
        let req = SynthRequest::new(&AdapterConfig::default(), Path::new("/in.png"), Path::new("/out"));
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["tasks"], serde_json::json!(["synthesize", "parse_face"]));
        assert_eq!(v["steps"], 50);
        assert_eq!(v["edit_prompt"], "a photograph of a person with clear skin, no redness or rash");
        req.validate().unwrap();
    }

    #[test]
    fn request_validation() {
        let base = SynthRequest::new(&AdapterConfig::default(), Path::new("a"), Path::new("b"));
        let unknown = SynthRequest {
            tasks: vec!["upscale".into()],
            ..base.clone()
        };
        assert!(unknown.validate().unwrap_err().contains("upscale"));
        assert!(SynthRequest { steps: 0, ..base.clone() }.validate().is_err());
        assert!(SynthRequest { tasks: vec![], ..base }.validate().is_err());
    }

    #[test]
    fn response_parses() {
        let r: SynthResponse = serde_json::from_str(
            r#"{"version":1,"reference":"r.png","labelmask":"m.png","class_map":"c.json","model_ids":{"diffusion":"x"},"elapsed_s":1.5}"#,
        )
        .unwrap();
        assert_eq!(r.model_ids["diffusion"], "x");
    }
}
