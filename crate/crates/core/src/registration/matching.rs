use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Descriptor, RegistrationError};

pub const DEFAULT_RATIO_MAX: f32 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    pub distance: u32,
    /// Best over second-best distance; 0 when no second candidate exists.
    pub ratio: f32,
}

#[inline]
pub fn hamming(a: &Descriptor, b: &Descriptor) -> u32 {
    a.bits
        .iter()
        .zip(&b.bits)
        .map(|(x, y)| (x ^ y).count_ones())
        .sum()
}

struct Nearest {
    index: usize,
    best: u32,
    second: Option<u32>,
}

/// Nearest and second-nearest neighbour; ties go to the lower index.
fn nearest(query: &Descriptor, pool: &[Descriptor]) -> Nearest {
    let mut out = Nearest {
        index: 0,
        best: u32::MAX,
        second: None,
    };
    for (j, d) in pool.iter().enumerate() {
        let dist = hamming(query, d);
        if dist < out.best {
            if out.best != u32::MAX {
                out.second = Some(out.best);
            }
            out.best = dist;
            out.index = j;
        } else if out.second.is_none_or(|s| dist < s) {
            out.second = Some(dist);
        }
    }
    out
}

/// Brute-force Hamming matching with a ratio test and mutual-best cross-check.
///
/// With a single candidate in `b` the ratio test is skipped. When the second
/// distance is zero the match is ambiguous and its ratio is reported as 1.
pub fn match_descriptors(
    a: &[Descriptor],
    b: &[Descriptor],
    ratio_max: f32,
) -> Result<Vec<Match>, RegistrationError> {
    if a.is_empty() || b.is_empty() {
        return Err(RegistrationError::EmptyDescriptorList);
    }
    let backward: Vec<usize> = b.par_iter().map(|d| nearest(d, a).index).collect();
    let matches = a
        .par_iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let n = nearest(d, b);
            let ratio = match n.second {
                None => 0.0,
                Some(0) => 1.0,
                Some(s) => n.best as f32 / s as f32,
            };
            if n.second.is_some() && ratio > ratio_max {
                return None;
            }
            if backward[n.index] != i {
                return None;
            }
            Some(Match {
                index_a: i,
                index_b: n.index,
                distance: n.best,
                ratio,
            })
        })
        .collect();
    Ok(matches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(seed: u64) -> Descriptor {
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut bits = [0u64; 4];
        for b in bits.iter_mut() {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            *b = x;
        }
        Descriptor { bits }
    }

    #[test]
    fn identity_matching() {
        let a: Vec<_> = (1..30).map(d).collect();
        let m = match_descriptors(&a, &a, DEFAULT_RATIO_MAX).unwrap();
        assert_eq!(m.len(), a.len());
        for (i, mm) in m.iter().enumerate() {
            assert_eq!((mm.index_a, mm.index_b, mm.distance), (i, i, 0));
        }
    }

    #[test]
    fn single_candidate_skips_ratio() {
        let a = [d(1)];
        let b = [d(2)];
        let m = match_descriptors(&a, &b, 0.0).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].distance, hamming(&a[0], &b[0]));
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(
            match_descriptors(&[], &[d(1)], 0.75),
            Err(RegistrationError::EmptyDescriptorList)
        ));
    }

    #[test]
    fn duplicate_targets_are_ambiguous() {
        let a = [d(1)];
        let b = [d(1), d(1)];
        assert!(match_descriptors(&a, &b, 0.75).unwrap().is_empty());
    }
}
