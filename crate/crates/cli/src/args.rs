use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use erysegm_core::pipeline::{PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(
    name = "erysegm",
    version,
    about = "Segment erythema by comparing a photo against a lesion-free reference",
    after_help = "Exit codes: 0 ok, 1 config/usage, 2 io, 3 adapter, 4 alignment, 5 masking, 6 segmentation."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run synthesis (if needed), alignment, skin masking and segmentation
    Pipeline(RunArgs),
    /// Align a reference onto the input and write the warped reference
    Align(RunArgs),
    /// Segment a pre-aligned input/reference pair
    Segment(RunArgs),
    /// Only invoke the reference synthesizer adapter
    Synth(RunArgs),
    /// Re-threshold a stored ΔA map without re-running alignment
    Histogram(HistogramArgs),
}

#[derive(Args, Default)]
pub struct RunArgs {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Face-parsing label map (single-channel PNG of class ids)
    #[arg(long)]
    pub labelmask: Option<PathBuf>,
    /// Class-name → id table for the label map
    #[arg(long)]
    pub class_map: Option<PathBuf>,
    /// Analyse the whole frame instead of the skin region
    #[arg(long)]
    pub no_skin_mask: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Lowe ratio bound for descriptor matches
    #[arg(long)]
    pub ratio_max: Option<f32>,
    /// RANSAC inlier distance in pixels
    #[arg(long)]
    pub inlier_px: Option<f64>,
    #[arg(long)]
    pub ransac_iters: Option<usize>,
    /// Seed for RANSAC sampling
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub adapter: AdapterArgs,
}

#[derive(Args, Default)]
pub struct ThresholdArgs {
    /// Threshold multiplier in τ = μ + kσ
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub open_radius: Option<u32>,
    #[arg(long)]
    pub close_radius: Option<u32>,
    /// Components smaller than this fraction of the domain are dropped
    #[arg(long)]
    pub min_area_fraction: Option<f64>,
    #[arg(long)]
    pub histogram_bins: Option<usize>,
    /// Overlay colour as r,g,b
    #[arg(long, value_parser = parse_rgb)]
    pub overlay_color: Option<[u8; 3]>,
    #[arg(long)]
    pub overlay_alpha: Option<f32>,
}

#[derive(Args, Default)]
pub struct AdapterArgs {
    /// Synthesizer command; the manifest path is appended as the last argument
    #[arg(long = "adapter", value_name = "COMMAND")]
    pub command: Option<String>,
    #[arg(long)]
    pub source_prompt: Option<String>,
    #[arg(long)]
    pub edit_prompt: Option<String>,
    /// Denoising steps requested from the synthesizer
    #[arg(long)]
    pub steps: Option<u32>,
    #[arg(long)]
    pub guidance_scale: Option<f64>,
    #[arg(long)]
    pub adapter_seed: Option<u64>,
}

#[derive(Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stored ΔA map; defaults to delta_a.dmap in the output directory
    #[arg(long)]
    pub delta_map: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
}

fn parse_rgb(s: &str) -> Result<[u8; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected r,g,b, got {s:?}"));
    }
    let mut rgb = [0u8; 3];
    for (slot, part) in rgb.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("colour component {part:?} is not in 0..=255"))?;
    }
    Ok(rgb)
}

fn base_config(path: Option<&PathBuf>) -> Result<PipelineConfig, PipelineError> {
    match path {
        Some(p) => PipelineConfig::from_file(p),
        None => Ok(PipelineConfig::default()),
    }
}

macro_rules! override_with {
    ($target:expr, $($field:ident),+ from $src:expr) => {
        $(if let Some(v) = $src.$field.clone() {
            $target.$field = v;
        })+
    };
}

impl ThresholdArgs {
    fn apply(&self, config: &mut PipelineConfig) {
        override_with!(config, k, open_radius, close_radius, min_area_fraction, histogram_bins, overlay_color, overlay_alpha from self);
    }
}

impl RunArgs {
    /// Built-in defaults, overlaid by the config file, overlaid by flags.
    pub fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let mut config = base_config(self.config.as_ref())?;
        if let Some(p) = &self.input {
            config.input_path = p.clone();
        }
        if let Some(p) = &self.out_dir {
            config.out_dir = p.clone();
        }
        if self.reference.is_some() {
            config.reference_path = self.reference.clone();
        }
        if self.labelmask.is_some() {
            config.labelmask_path = self.labelmask.clone();
        }
        if self.class_map.is_some() {
            config.class_map_path = self.class_map.clone();
        }
        if self.no_skin_mask {
            config.use_skin_mask = false;
        }
        override_with!(config, ratio_max, inlier_px, ransac_iters, seed from self);
        self.threshold.apply(&mut config);

        let a = &self.adapter;
        if a.command.is_some() {
            config.adapter.command = a.command.clone();
        }
        override_with!(config.adapter, source_prompt, edit_prompt, steps, guidance_scale from a);
        if let Some(seed) = a.adapter_seed {
            config.adapter.seed = seed;
        }
        Ok(config)
    }
}

impl HistogramArgs {
    pub fn resolve(&self) -> Result<(PathBuf, PipelineConfig), PipelineError> {
        let mut config = base_config(self.config.as_ref())?;
        if let Some(p) = &self.out_dir {
            config.out_dir = p.clone();
        }
        self.threshold.apply(&mut config);
        let delta_map = self
            .delta_map
            .clone()
            .unwrap_or_else(|| config.out_dir.join(erysegm_core::pipeline::artifact::DELTA_MAP));
        Ok((delta_map, config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("erysegm").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn rgb_parsing() {
        assert_eq!(parse_rgb("255, 0,10"), Ok([255, 0, 10]));
        assert!(parse_rgb("1,2").is_err());
        assert!(parse_rgb("1,2,300").is_err());
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"k": 2.5, "seed": 9, "histogram_bins": 16, "adapter": {"steps": 20}}"#).unwrap();
        let cli = parse(&[
            "pipeline",
            "--config",
            file.to_str().unwrap(),
            "--input",
            "a.png",
            "--k",
            "1.0",
            "--overlay-color",
            "0,255,0",
            "--guidance-scale",
            "3",
        ]);
        let Command::Pipeline(args) = cli.command else { panic!() };
        let config = args.resolve().unwrap();
        assert_eq!(config.k, 1.0);
        assert_eq!(config.seed, 9);
        assert_eq!(config.histogram_bins, 16);
        assert_eq!(config.overlay_color, [0, 255, 0]);
        assert_eq!(config.adapter.steps, 20);
        assert_eq!(config.adapter.guidance_scale, 3.0);
        assert_eq!(config.ransac_iters, PipelineConfig::default().ransac_iters);
        assert!(config.use_skin_mask);
    }

    #[test]
    fn histogram_defaults_to_stored_map_in_out_dir() {
        let cli = parse(&["histogram", "--out-dir", "runs/a", "--k", "2"]);
        let Command::Histogram(args) = cli.command else { panic!() };
        let (dmap, config) = args.resolve().unwrap();
        assert_eq!(dmap, PathBuf::from("runs/a/delta_a.dmap"));
        assert_eq!(config.k, 2.0);
    }
}
