use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::Utc;

use super::report::write_json;
use super::{
    invoke_synthesizer, resolve_adapter_command, AdapterProvenance, AlignmentSummary, PipelineConfig,
    PipelineError, Report, SegmentParams, SegmentationSummary, Stage, SynthOutput, ThresholdSummary,
    Timestamps, SCHEMA_VERSION,
};
use crate::erythema::{
    channel_difference_means, delta_a, delta_stats, histogram, load_delta_map, postprocess,
    render_heatmap, render_histogram, render_overlay, save_delta_map, threshold_mask,
    write_histogram_csv, DeltaMap, DeltaStats, ErythemaError, HistogramData,
};
use crate::imaging::{encode_gray_png, encode_png, load_image, srgb_to_lab, RasterImage};
use crate::masking::{
    load_label_mask, mask_and, select_skin, BinaryMask, ClassMap, DEFAULT_EXCLUDE, DEFAULT_INCLUDE,
};
use crate::registration::{align, AlignmentResult};

/// Fixed artifact file names inside the output directory.
pub mod artifact {
    pub const REFERENCE: &str = "reference.png";
    pub const ALIGNED: &str = "aligned.png";
    pub const VALID_MASK: &str = "valid_mask.png";
    pub const SKIN_MASK: &str = "skin_mask.png";
    pub const DELTA_MAP: &str = "delta_a.dmap";
    pub const HEATMAP: &str = "delta_a_heatmap.png";
    pub const HISTOGRAM_CSV: &str = "histogram.csv";
    pub const HISTOGRAM_PNG: &str = "histogram.png";
    pub const ERYTHEMA_MASK: &str = "erythema_mask.png";
    pub const OVERLAY: &str = "overlay.png";
    pub const REPORT: &str = "report.json";
    pub const ALIGNMENT: &str = "alignment.json";
    pub const SEGMENTATION: &str = "segmentation.json";
    pub const THRESHOLD: &str = "threshold.json";
    /// Subdirectory handed to the synthesizer.
    pub const ADAPTER_DIR: &str = "adapter";
}

type Artifacts = BTreeMap<String, String>;

fn record(artifacts: &mut Artifacts, key: &str, file: &str) {
    artifacts.insert(key.to_string(), file.to_string());
}

fn write_mask(mask: &BinaryMask, path: &Path) -> Result<(), PipelineError> {
    let bytes: Vec<u8> = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_gray_png(mask.width(), mask.height(), &bytes, path)?;
    Ok(())
}

fn create_out_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| PipelineError::new(Stage::Io, format!("{}: cannot create output directory: {e}", dir.display())))
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, PipelineError> {
    path.as_deref()
        .ok_or_else(|| PipelineError::config(format!("{what} is required")))
}

/// Thresholding outcome for one ΔA map.
#[derive(Debug, Clone)]
pub struct Thresholded {
    pub stats: DeltaStats,
    /// Pixels strictly above τ, before cleanup.
    pub raw_mask: BinaryMask,
    /// Cleaned mask, restricted to the map's domain.
    pub mask: BinaryMask,
    pub histogram: HistogramData,
}

impl Thresholded {
    pub fn summary(&self) -> ThresholdSummary {
        ThresholdSummary::new(&self.stats, self.mask.count())
    }
}

pub fn apply_threshold(map: &DeltaMap, params: &SegmentParams) -> Result<Thresholded, ErythemaError> {
    let stats = delta_stats(map, params.k)?;
    let raw_mask = threshold_mask(map, &stats);
    let cleaned = postprocess(&raw_mask, &params.postprocess(stats.n));
    let mask = mask_and(&cleaned, map.domain())?;
    let histogram = histogram(map, &stats, params.histogram_bins)?;
    Ok(Thresholded {
        stats,
        raw_mask,
        mask,
        histogram,
    })
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub map: DeltaMap,
    pub thresholded: Thresholded,
    pub delta_l_mean: f64,
    pub delta_b_mean: f64,
}

impl Segmentation {
    pub fn summary(&self) -> SegmentationSummary {
        SegmentationSummary {
            threshold: self.thresholded.summary(),
            delta_l_mean: self.delta_l_mean,
            delta_b_mean: self.delta_b_mean,
        }
    }
}

/// ΔA analysis of an already registered pair over `domain`.
pub fn segment(
    original: &RasterImage,
    reference: &RasterImage,
    domain: &BinaryMask,
    params: &SegmentParams,
) -> Result<Segmentation, ErythemaError> {
    if original.dimensions() != reference.dimensions() {
        return Err(ErythemaError::DimensionMismatch {
            a: original.dimensions(),
            b: reference.dimensions(),
        });
    }
    let lab_orig = srgb_to_lab(original);
    let lab_ref = srgb_to_lab(reference);
    let map = delta_a(&lab_orig, &lab_ref, domain)?;
    let thresholded = apply_threshold(&map, params)?;
    let (delta_l_mean, delta_b_mean) = channel_difference_means(&lab_orig, &lab_ref, domain)?;
    Ok(Segmentation {
        map,
        thresholded,
        delta_l_mean,
        delta_b_mean,
    })
}

/// Skin pixels of a face-parsing label map. The bundled class table is used
/// when `class_map` is `None`.
pub fn skin_mask(labelmask: &Path, class_map: Option<&Path>, expected: (u32, u32)) -> Result<BinaryMask, PipelineError> {
    let table = match class_map {
        Some(p) => ClassMap::load(p)?,
        None => ClassMap::face_parsing(),
    };
    let labels = load_label_mask(labelmask, &table)?;
    if labels.dimensions() != expected {
        return Err(PipelineError::new(
            Stage::Masking,
            format!(
                "{}: label map is {:?}, input image is {:?}",
                labelmask.display(),
                labels.dimensions(),
                expected
            ),
        ));
    }
    Ok(select_skin(&labels, DEFAULT_INCLUDE, DEFAULT_EXCLUDE)?)
}

pub fn write_alignment_artifacts(
    out_dir: &Path,
    alignment: &AlignmentResult,
    artifacts: &mut Artifacts,
) -> Result<(), PipelineError> {
    encode_png(&alignment.warped_reference, out_dir.join(artifact::ALIGNED))?;
    record(artifacts, "aligned", artifact::ALIGNED);
    write_mask(&alignment.analysis_region(), &out_dir.join(artifact::VALID_MASK))?;
    record(artifacts, "valid_mask", artifact::VALID_MASK);
    Ok(())
}

pub fn write_threshold_artifacts(
    out_dir: &Path,
    thresholded: &Thresholded,
    artifacts: &mut Artifacts,
) -> Result<(), PipelineError> {
    write_histogram_csv(&thresholded.histogram, out_dir.join(artifact::HISTOGRAM_CSV))?;
    record(artifacts, "histogram_csv", artifact::HISTOGRAM_CSV);
    encode_png(&render_histogram(&thresholded.histogram), out_dir.join(artifact::HISTOGRAM_PNG))?;
    record(artifacts, "histogram_png", artifact::HISTOGRAM_PNG);
    write_mask(&thresholded.mask, &out_dir.join(artifact::ERYTHEMA_MASK))?;
    record(artifacts, "erythema_mask", artifact::ERYTHEMA_MASK);
    Ok(())
}

pub fn write_segmentation_artifacts(
    out_dir: &Path,
    original: &RasterImage,
    segmentation: &Segmentation,
    params: &SegmentParams,
    artifacts: &mut Artifacts,
) -> Result<(), PipelineError> {
    save_delta_map(&segmentation.map, out_dir.join(artifact::DELTA_MAP))?;
    record(artifacts, "delta_a", artifact::DELTA_MAP);
    encode_png(&render_heatmap(&segmentation.map, None), out_dir.join(artifact::HEATMAP))?;
    record(artifacts, "delta_a_heatmap", artifact::HEATMAP);
    write_threshold_artifacts(out_dir, &segmentation.thresholded, artifacts)?;
    let overlay = render_overlay(
        original,
        &segmentation.thresholded.mask,
        params.overlay_color,
        params.overlay_alpha,
    )?;
    encode_png(&overlay, out_dir.join(artifact::OVERLAY))?;
    record(artifacts, "overlay", artifact::OVERLAY);
    Ok(())
}

fn check_subset_chain(
    mask: &BinaryMask,
    domain: &BinaryMask,
    skin: &BinaryMask,
    region: &BinaryMask,
) -> Result<(), PipelineError> {
    if mask.is_subset_of(domain) && domain.is_subset_of(skin) && domain.is_subset_of(region) {
        Ok(())
    } else {
        Err(PipelineError::new(
            Stage::Segmentation,
            "erythema mask escaped the skin ∩ valid region",
        ))
    }
}

fn analysis_domain(skin: &BinaryMask, region: &BinaryMask) -> Result<BinaryMask, PipelineError> {
    let domain = mask_and(skin, region)?;
    if domain.is_empty() {
        return Err(PipelineError::new(
            Stage::Masking,
            "skin mask does not overlap the aligned region; nothing to analyse",
        ));
    }
    Ok(domain)
}

/// Registration only.
pub fn run_alignment(original: &RasterImage, reference: &RasterImage, config: &PipelineConfig) -> Result<AlignmentResult, PipelineError> {
    Ok(align(original, reference, &config.align_params())?)
}

/// Synthesizes a reference and label map for `config.input_path`.
pub fn run_synth(config: &PipelineConfig) -> Result<SynthOutput, PipelineError> {
    config.validate()?;
    if resolve_adapter_command(&config.adapter).is_none() {
        return Err(PipelineError::config(format!(
            "no adapter configured (use --adapter or {})",
            super::ADAPTER_ENV
        )));
    }
    if !config.input_path.is_file() {
        return Err(PipelineError::new(
            Stage::Io,
            format!("{}: file not found", config.input_path.display()),
        ));
    }
    create_out_dir(&config.out_dir)?;
    Ok(invoke_synthesizer(
        &config.adapter,
        &config.input_path,
        &config.out_dir.join(artifact::ADAPTER_DIR),
    )?)
}

/// Registers `reference_path` onto `input_path`; writes the warped reference,
/// the analysis region and `alignment.json`.
pub fn run_align(config: &PipelineConfig) -> Result<AlignmentSummary, PipelineError> {
    config.validate()?;
    let reference_path = require(&config.reference_path, "reference image")?;
    let original = load_image(&config.input_path)?;
    let reference = load_image(reference_path)?;
    let alignment = run_alignment(&original, &reference, config)?;
    create_out_dir(&config.out_dir)?;
    let mut artifacts = Artifacts::new();
    write_alignment_artifacts(&config.out_dir, &alignment, &mut artifacts)?;
    let summary = AlignmentSummary::from(&alignment);
    write_json(&summary, &config.out_dir.join(artifact::ALIGNMENT))?;
    Ok(summary)
}

/// ΔA analysis of a pre-aligned pair; writes the map, renders and
/// `segmentation.json`.
pub fn run_segment(config: &PipelineConfig) -> Result<SegmentationSummary, PipelineError> {
    config.validate()?;
    let reference_path = require(&config.reference_path, "reference image")?;
    let original = load_image(&config.input_path)?;
    let reference = load_image(reference_path)?;
    if original.dimensions() != reference.dimensions() {
        return Err(ErythemaError::DimensionMismatch {
            a: original.dimensions(),
            b: reference.dimensions(),
        }
        .into());
    }
    let (w, h) = original.dimensions();
    let skin = if config.use_skin_mask {
        let labels = require(&config.labelmask_path, "label map (or --no-skin-mask)")?;
        skin_mask(labels, config.class_map_path.as_deref(), (w, h))?
    } else {
        BinaryMask::filled(w, h, true)
    };
    let domain = analysis_domain(&skin, &BinaryMask::filled(w, h, true))?;
    let params = config.segment_params();
    let segmentation = segment(&original, &reference, &domain, &params)?;

    create_out_dir(&config.out_dir)?;
    let mut artifacts = Artifacts::new();
    write_mask(&skin, &config.out_dir.join(artifact::SKIN_MASK))?;
    write_segmentation_artifacts(&config.out_dir, &original, &segmentation, &params, &mut artifacts)?;
    let summary = segmentation.summary();
    write_json(&summary, &config.out_dir.join(artifact::SEGMENTATION))?;
    Ok(summary)
}

/// Re-thresholds a stored ΔA map with new parameters.
pub fn run_histogram(delta_map: &Path, params: &SegmentParams, out_dir: &Path) -> Result<ThresholdSummary, PipelineError> {
    if !params.k.is_finite() {
        return Err(PipelineError::config(format!("k must be finite, got {}", params.k)));
    }
    if params.histogram_bins == 0 {
        return Err(PipelineError::config("histogram bins must be at least 1"));
    }
    let map = load_delta_map(delta_map).map_err(|e| match e {
        ErythemaError::InvalidDeltaMap { .. } => PipelineError::new(Stage::Io, e.to_string()),
        other => other.into(),
    })?;
    let thresholded = apply_threshold(&map, params)?;
    create_out_dir(out_dir)?;
    let mut artifacts = Artifacts::new();
    write_threshold_artifacts(out_dir, &thresholded, &mut artifacts)?;
    let summary = thresholded.summary();
    write_json(&summary, &out_dir.join(artifact::THRESHOLD))?;
    Ok(summary)
}

/// Full run: synthesize (when needed), align, isolate skin, threshold ΔA and
/// write every artifact plus `report.json`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Report, PipelineError> {
    let started = Utc::now();
    config.validate()?;
    let needs_labels = config.use_skin_mask && config.labelmask_path.is_none();
    let needs_adapter = config.reference_path.is_none() || needs_labels;
    if needs_adapter && resolve_adapter_command(&config.adapter).is_none() {
        let missing = if config.reference_path.is_none() {
            "reference image"
        } else {
            "label map"
        };
        return Err(PipelineError::config(format!(
            "no {missing} given and no adapter configured (use --adapter or {})",
            super::ADAPTER_ENV
        )));
    }
    let original = load_image(&config.input_path)?;
    create_out_dir(&config.out_dir)?;

    let mut reference_path = config.reference_path.clone();
    let mut labelmask_path = config.labelmask_path.clone();
    let mut class_map_path = config.class_map_path.clone();
    let mut provenance = None;
    if needs_adapter {
        let synth = invoke_synthesizer(
            &config.adapter,
            &config.input_path,
            &config.out_dir.join(artifact::ADAPTER_DIR),
        )?;
        reference_path.get_or_insert(synth.reference.clone());
        if labelmask_path.is_none() {
            labelmask_path = Some(synth.labelmask.clone());
            class_map_path = Some(synth.class_map.clone());
        }
        provenance = Some(AdapterProvenance {
            command: synth.command,
            source_prompt: config.adapter.source_prompt.clone(),
            edit_prompt: config.adapter.edit_prompt.clone(),
            steps: config.adapter.steps,
            guidance_scale: config.adapter.guidance_scale,
            seed: config.adapter.seed,
            reference: synth.reference,
            labelmask: synth.labelmask,
            model_ids: synth.response.model_ids,
            elapsed_s: synth.response.elapsed_s,
        });
    }
    let reference = load_image(reference_path.as_deref().expect("reference resolved"))?;

    let alignment = run_alignment(&original, &reference, config)?;
    let (w, h) = original.dimensions();
    let region = alignment.analysis_region();
    let skin = match (&labelmask_path, config.use_skin_mask) {
        (Some(labels), true) => skin_mask(labels, class_map_path.as_deref(), (w, h))?,
        _ => BinaryMask::filled(w, h, true),
    };
    let domain = analysis_domain(&skin, &region)?;
    let params = config.segment_params();
    let segmentation = segment(&original, &alignment.warped_reference, &domain, &params)?;
    check_subset_chain(&segmentation.thresholded.mask, &domain, &skin, &region)?;

    let out = &config.out_dir;
    let mut artifacts = Artifacts::new();
    encode_png(&reference, out.join(artifact::REFERENCE))?;
    record(&mut artifacts, "reference", artifact::REFERENCE);
    write_alignment_artifacts(out, &alignment, &mut artifacts)?;
    write_mask(&skin, &out.join(artifact::SKIN_MASK))?;
    record(&mut artifacts, "skin_mask", artifact::SKIN_MASK);
    write_segmentation_artifacts(out, &original, &segmentation, &params, &mut artifacts)?;
    record(&mut artifacts, "report", artifact::REPORT);

    let report = Report {
        schema_version: SCHEMA_VERSION,
        timestamps: Timestamps::since(started),
        config: config.clone(),
        alignment: AlignmentSummary::from(&alignment),
        segmentation: segmentation.summary(),
        artifacts,
        adapter: provenance,
    };
    report
        .check()
        .map_err(|e| PipelineError::new(Stage::Segmentation, e))?;
    write_json(&report, &out.join(artifact::REPORT))?;
    Ok(report)
}
