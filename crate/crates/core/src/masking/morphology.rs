//! Binary morphology with a disc structuring element.
//!
//! The disc is decomposed into one horizontal run per row offset, so each
//! run test is a prefix-sum lookup. Pixels beyond the image border are
//! ignored by both erosion and dilation, which keeps the two adjoint: opening
//! is anti-extensive and idempotent, closing is extensive and idempotent.

use rayon::prelude::*;

use super::BinaryMask;

/// Offsets `(dx, dy)` with `dx² + dy² ≤ radius²`.
pub fn disc_offsets(radius: u32) -> Vec<(i32, i32)> {
    let r = radius as i32;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Half-width of the disc at each row offset `-r..=r`.
fn disc_runs(radius: u32) -> Vec<(i32, i32)> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let mut half = 0i64;
            while (half + 1) * (half + 1) + dy * dy <= r * r {
                half += 1;
            }
            (dy as i32, half as i32)
        })
        .collect()
}

/// Per-row prefix counts of set pixels; row stride is `width + 1`.
fn row_prefix(mask: &BinaryMask) -> Vec<u32> {
    let w = mask.width() as usize;
    let mut prefix = vec![0u32; (w + 1) * mask.height() as usize];
    for (row, out) in mask
        .as_slice()
        .chunks_exact(w)
        .zip(prefix.chunks_exact_mut(w + 1))
    {
        for (x, &b) in row.iter().enumerate() {
            out[x + 1] = out[x] + b as u32;
        }
    }
    prefix
}

enum Op {
    Erode,
    Dilate,
}

fn apply(mask: &BinaryMask, radius: u32, op: Op) -> BinaryMask {
    if radius == 0 || mask.width() == 0 || mask.height() == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let stride = w as usize + 1;
    let prefix = row_prefix(mask);
    let runs = disc_runs(radius);
    let mut bits = vec![false; mask.as_slice().len()];
    bits.par_chunks_exact_mut(w as usize)
        .enumerate()
        .for_each(|(y, out)| {
            let y = y as i32;
            for (x, o) in out.iter_mut().enumerate() {
                let x = x as i32;
                let mut any = false;
                let mut all = true;
                for &(dy, half) in &runs {
                    let yy = y + dy;
                    if yy < 0 || yy >= h {
                        continue;
                    }
                    let lo = (x - half).max(0) as usize;
                    let hi = (x + half).min(w - 1) as usize + 1;
                    let row = &prefix[yy as usize * stride..(yy as usize + 1) * stride];
                    let set = row[hi] - row[lo];
                    any |= set > 0;
                    all &= set as usize == hi - lo;
                }
                *o = match op {
                    Op::Erode => all,
                    Op::Dilate => any,
                };
            }
        });
    BinaryMask::new(mask.width(), mask.height(), bits).expect("same dimensions")
}

pub fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    apply(mask, radius, Op::Erode)
}

pub fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    apply(mask, radius, Op::Dilate)
}

/// Erosion followed by dilation.
pub fn morph_open(mask: &BinaryMask, radius: u32) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

/// Dilation followed by erosion.
pub fn morph_close(mask: &BinaryMask, radius: u32) -> BinaryMask {
    erode(&dilate(mask, radius), radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct definition over the offset list, used as the oracle.
    fn brute(mask: &BinaryMask, radius: u32, erode: bool) -> BinaryMask {
        let offs = disc_offsets(radius);
        let (w, h) = (mask.width() as i32, mask.height() as i32);
        BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
            let mut inside = offs.iter().filter_map(|&(dx, dy)| {
                let (xx, yy) = (x as i32 + dx, y as i32 + dy);
                (xx >= 0 && yy >= 0 && xx < w && yy < h).then(|| mask.get(xx as u32, yy as u32))
            });
            if erode {
                inside.all(|b| b)
            } else {
                inside.any(|b| b)
            }
        })
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1u32..24, 1u32..24).prop_flat_map(|(w, h)| {
            proptest::collection::vec(prop::bool::weighted(0.6), (w * h) as usize)
                .prop_map(move |bits| BinaryMask::new(w, h, bits).unwrap())
        })
    }

    #[test]
    fn disc_shapes() {
        assert_eq!(disc_offsets(0), vec![(0, 0)]);
        assert_eq!(disc_offsets(1).len(), 5);
        assert_eq!(disc_offsets(2).len(), 13);
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = BinaryMask::from_fn(7, 5, |x, y| (x * y) % 3 == 0);
        assert_eq!(morph_open(&m, 0), m);
        assert_eq!(morph_close(&m, 0), m);
    }

    #[test]
    fn isolated_pixel_removed_by_open() {
        let mut m = BinaryMask::filled(9, 9, false);
        m.set(4, 4, true);
        assert!(morph_open(&m, 1).is_empty());
    }

    #[test]
    fn close_fills_single_hole() {
        let mut m = BinaryMask::filled(20, 20, true);
        m.set(9, 11, false);
        // brute-force oracle on the same grid
        let expected = brute(&brute(&m, 1, false), 1, true);
        let closed = morph_close(&m, 1);
        assert_eq!(closed, expected);
        assert_eq!(closed.count(), 400);
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in arb_mask(), r in 0u32..4) {
            prop_assert_eq!(erode(&m, r), brute(&m, r, true));
            prop_assert_eq!(dilate(&m, r), brute(&m, r, false));
        }

        #[test]
        fn open_close_ordering(m in arb_mask(), r in 0u32..4) {
            let o = morph_open(&m, r);
            let c = morph_close(&m, r);
            prop_assert!(o.is_subset_of(&m));
            prop_assert!(m.is_subset_of(&c));
            prop_assert_eq!(morph_open(&o, r), o.clone());
            prop_assert_eq!(morph_close(&c, r), c.clone());
            prop_assert_eq!(o.dimensions(), m.dimensions());
        }
    }
}
