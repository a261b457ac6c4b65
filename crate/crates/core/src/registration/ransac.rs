//! Seeded RANSAC over 4-point DLT hypotheses.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::homography::has_collinear_triple;
use super::{estimate_homography_dlt, Homography, Keypoint, Match, PointPair, RegistrationError};

const SAMPLE_SIZE: usize = 4;
const MAX_REFIT_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    /// Inlier reprojection threshold in pixels.
    pub inlier_px: f64,
    pub max_iters: usize,
    /// Adaptive stopping confidence; values ≥ 1 disable early termination.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            inlier_px: 3.0,
            max_iters: 2000,
            confidence: 0.999,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    /// Refit on `inliers` by least-squares DLT.
    pub homography: Homography,
    /// Indices into the input correspondences, ascending.
    pub inliers: Vec<usize>,
    /// RMSE of the final model over `inliers`, pixels.
    pub rmse: f64,
    /// Non-degenerate hypotheses evaluated.
    pub iterations: usize,
}

struct Consensus {
    inliers: Vec<usize>,
    sq_error: f64,
}

fn consensus(h: &Homography, pairs: &[PointPair], threshold: f64) -> Consensus {
    let mut inliers = Vec::new();
    let mut sq_error = 0.0;
    for (i, (s, d)) in pairs.iter().enumerate() {
        let e = h.transfer_error(*s, *d);
        if e <= threshold {
            inliers.push(i);
            sq_error += e * e;
        }
    }
    Consensus { inliers, sq_error }
}

fn required_iterations(inlier_ratio: f64, confidence: f64) -> usize {
    if confidence >= 1.0 {
        return usize::MAX;
    }
    let good = inlier_ratio.powi(SAMPLE_SIZE as i32);
    if good <= 0.0 {
        return usize::MAX;
    }
    if good >= 1.0 {
        return 1;
    }
    let n = (1.0 - confidence).ln() / (1.0 - good).ln();
    if n.is_finite() {
        n.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

fn subset(pairs: &[PointPair], idx: &[usize]) -> Vec<PointPair> {
    idx.iter().map(|&i| pairs[i]).collect()
}

fn rmse(h: &Homography, pairs: &[PointPair], idx: &[usize]) -> f64 {
    let sum: f64 = idx
        .iter()
        .map(|&i| h.transfer_error(pairs[i].0, pairs[i].1).powi(2))
        .sum();
    (sum / idx.len().max(1) as f64).sqrt()
}

/// Robust homography mapping each pair's source point onto its destination.
///
/// Hypotheses are drawn sequentially from a ChaCha stream seeded with
/// `params.seed`, so the result depends only on the inputs and the seed.
/// Degenerate samples are redrawn without counting as an iteration. The best
/// consensus set is refit by DLT; while the refit model gathers a strictly
/// larger consensus, that set replaces it and is refit again.
pub fn ransac_homography_pairs(
    pairs: &[PointPair],
    params: &RansacParams,
) -> Result<RansacOutcome, RegistrationError> {
    let n = pairs.len();
    if n < SAMPLE_SIZE {
        return Err(RegistrationError::InsufficientPoints {
            needed: SAMPLE_SIZE,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let max_attempts = params.max_iters.saturating_mul(20).max(100);
    let mut needed = params.max_iters;
    let mut iterations = 0;
    let mut attempts = 0;
    let mut best: Option<(Homography, Consensus)> = None;

    while iterations < needed && attempts < max_attempts {
        attempts += 1;
        let sample = index::sample(&mut rng, n, SAMPLE_SIZE).into_vec();
        let src: Vec<[f64; 2]> = sample.iter().map(|&i| pairs[i].0).collect();
        let dst: Vec<[f64; 2]> = sample.iter().map(|&i| pairs[i].1).collect();
        if has_collinear_triple(&src) || has_collinear_triple(&dst) {
            continue;
        }
        let Ok(h) = estimate_homography_dlt(&subset(pairs, &sample)) else {
            continue;
        };
        iterations += 1;
        let c = consensus(&h, pairs, params.inlier_px);
        let better = match &best {
            None => true,
            Some((_, b)) => {
                c.inliers.len() > b.inliers.len()
                    || (c.inliers.len() == b.inliers.len() && c.sq_error < b.sq_error)
            }
        };
        if better {
            let ratio = c.inliers.len() as f64 / n as f64;
            needed = required_iterations(ratio, params.confidence).min(params.max_iters);
            best = Some((h, c));
        }
    }

    let (mut model, mut set) = best.ok_or(RegistrationError::NoConsensus { inliers: 0 })?;
    if set.inliers.len() < SAMPLE_SIZE {
        return Err(RegistrationError::NoConsensus {
            inliers: set.inliers.len(),
        });
    }

    let mut rounds = 0;
    let homography = loop {
        let refit = match estimate_homography_dlt(&subset(pairs, &set.inliers)) {
            Ok(h) => h,
            Err(_) => break model,
        };
        rounds += 1;
        let next = consensus(&refit, pairs, params.inlier_px);
        if next.inliers.len() > set.inliers.len() && rounds < MAX_REFIT_ROUNDS {
            model = refit;
            set = next;
        } else {
            break refit;
        }
    };
    let rmse = rmse(&homography, pairs, &set.inliers);
    Ok(RansacOutcome {
        homography,
        inliers: set.inliers,
        rmse,
        iterations,
    })
}

/// RANSAC over descriptor matches. The homography maps `kp_b` points onto
/// `kp_a` points; inlier indices refer to `matches`.
pub fn ransac_homography(
    matches: &[Match],
    kp_a: &[Keypoint],
    kp_b: &[Keypoint],
    params: &RansacParams,
) -> Result<RansacOutcome, RegistrationError> {
    let pairs: Vec<PointPair> = matches
        .iter()
        .map(|m| {
            let a = &kp_a[m.index_a];
            let b = &kp_b[m.index_b];
            ([b.x as f64, b.y as f64], [a.x as f64, a.y as f64])
        })
        .collect();
    ransac_homography_pairs(&pairs, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_bound() {
        assert_eq!(required_iterations(1.0, 0.999), 1);
        assert_eq!(required_iterations(0.0, 0.999), usize::MAX);
        // 0.5^4 = 1/16; ln(0.001)/ln(15/16) ≈ 107.03
        assert_eq!(required_iterations(0.5, 0.999), 108);
        assert_eq!(required_iterations(0.9, 1.0), usize::MAX);
    }

    #[test]
    fn three_pairs_rejected() {
        let p = ([0.0, 0.0], [1.0, 1.0]);
        assert!(matches!(
            ransac_homography_pairs(&[p, p, p], &RansacParams::default()),
            Err(RegistrationError::InsufficientPoints { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn all_coincident_is_no_consensus() {
        let p = ([1.0, 1.0], [1.0, 1.0]);
        assert!(matches!(
            ransac_homography_pairs(&[p; 10], &RansacParams::default()),
            Err(RegistrationError::NoConsensus { .. })
        ));
    }
}
