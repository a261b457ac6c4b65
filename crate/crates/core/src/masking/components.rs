//! 8-connected component labeling.

use super::BinaryMask;

/// Component labels (0 = background, components numbered from 1 in raster
/// order of their first pixel) and the pixel area of each component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<u32>,
    /// `areas[i]` is the area of component `i + 1`.
    pub areas: Vec<usize>,
}

pub fn label_components(mask: &BinaryMask) -> Components {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let bits = mask.as_slice();
    let mut labels = vec![0u32; bits.len()];
    let mut areas = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut area = 0usize;
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = (i as i64 % w, i as i64 / w);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        areas.push(area);
    }
    Components { labels, areas }
}

/// Drops 8-connected components with fewer than `min_area` pixels.
pub fn remove_small_components(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    if min_area <= 1 {
        return mask.clone();
    }
    let comps = label_components(mask);
    let bits = comps
        .labels
        .iter()
        .map(|&l| l != 0 && comps.areas[l as usize - 1] >= min_area)
        .collect();
    BinaryMask::new(mask.width(), mask.height(), bits).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_connect() {
        let m = BinaryMask::from_fn(4, 4, |x, y| x == y);
        let c = label_components(&m);
        assert_eq!(c.areas, vec![4]);
    }

    #[test]
    fn separate_blobs() {
        let m = BinaryMask::from_fn(10, 3, |x, _| !(2..=6).contains(&x));
        let c = label_components(&m);
        assert_eq!(c.areas, vec![6, 9]);
        let kept = remove_small_components(&m, 7);
        assert_eq!(kept.count(), 9);
        assert!(!kept.get(0, 0) && kept.get(9, 2));
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::filled(5, 5, false);
        assert!(label_components(&m).areas.is_empty());
        assert!(remove_small_components(&m, 3).is_empty());
    }
}
