use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DeltaMap, DeltaStats, ErythemaError};
use crate::imaging::{ImagingError, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramData {
    /// `counts.len() + 1` ascending edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mu: f64,
    pub tau: f64,
}

impl HistogramData {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Equal-width bins over `[min, max]` of the domain values. A single-valued
/// map yields one degenerate bin.
pub fn histogram(map: &DeltaMap, stats: &DeltaStats, bins: usize) -> Result<HistogramData, ErythemaError> {
    if bins == 0 {
        return Err(ErythemaError::InvalidParameter("bins must be ≥ 1".into()));
    }
    let (min, max) = map
        .domain_values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v as f64), hi.max(v as f64))
        });
    if min > max {
        return Err(ErythemaError::EmptyDomain);
    }
    if min == max {
        return Ok(HistogramData {
            bin_edges: vec![min, max],
            counts: vec![map.domain_values().count()],
            mu: stats.mu,
            tau: stats.tau,
        });
    }
    let width = (max - min) / bins as f64;
    let bin_edges = (0..=bins)
        .map(|i| if i == bins { max } else { min + i as f64 * width })
        .collect();
    let mut counts = vec![0usize; bins];
    for v in map.domain_values() {
        let idx = (((v as f64 - min) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(HistogramData {
        bin_edges,
        counts,
        mu: stats.mu,
        tau: stats.tau,
    })
}

/// `bin_lo,bin_hi,count` with a header row.
pub fn write_histogram_csv(hist: &HistogramData, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in hist.counts.iter().enumerate() {
        writeln!(out, "{},{},{}", hist.bin_edges[i], hist.bin_edges[i + 1], c).expect("string write");
    }
    std::fs::write(path.as_ref(), out).map_err(|source| ImagingError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}

const CHART_W: u32 = 640;
const CHART_H: u32 = 320;
const PAD: u32 = 20;
const BAR: [u8; 3] = [90, 90, 90];
const MU_LINE: [u8; 3] = [30, 90, 220];
const TAU_LINE: [u8; 3] = [220, 30, 30];

/// Bar chart of the counts with vertical markers at μ (blue) and τ (red).
pub fn render_histogram(hist: &HistogramData) -> RasterImage {
    let mut img = RasterImage::filled(CHART_W, CHART_H, [255, 255, 255]);
    let plot_w = CHART_W - 2 * PAD;
    let plot_h = CHART_H - 2 * PAD;
    let lo = hist.bin_edges[0];
    let hi = *hist.bin_edges.last().expect("at least two edges");
    let span = (hi - lo).max(f64::EPSILON);
    let max_count = hist.counts.iter().copied().max().unwrap_or(0).max(1);
    let n = hist.counts.len() as u32;
    for (i, &c) in hist.counts.iter().enumerate() {
        let x0 = PAD + (i as u32 * plot_w) / n;
        let x1 = (PAD + ((i as u32 + 1) * plot_w) / n).max(x0 + 1);
        let bar_h = ((c as f64 / max_count as f64) * plot_h as f64).round() as u32;
        for x in x0..x1.min(PAD + plot_w) {
            for y in (PAD + plot_h - bar_h)..(PAD + plot_h) {
                img.set_pixel(x, y, BAR);
            }
        }
    }
    for x in PAD..PAD + plot_w {
        img.set_pixel(x, PAD + plot_h, [0, 0, 0]);
    }
    for (value, color) in [(hist.mu, MU_LINE), (hist.tau, TAU_LINE)] {
        if !value.is_finite() || value < lo || value > hi {
            continue;
        }
        let x = PAD + (((value - lo) / span) * (plot_w - 1) as f64).round() as u32;
        for y in PAD..PAD + plot_h {
            img.set_pixel(x, y, color);
        }
    }
    img
}
