use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use serde::{Deserialize, Serialize};

use super::{BinaryMask, MaskError};
use crate::imaging::ImagingError;

/// Id assigned to label pixels whose value is not in the class map.
pub const UNKNOWN_ID: u8 = 255;

/// Largest tolerated fraction of unknown-id pixels.
pub const DEFAULT_UNKNOWN_LIMIT: f64 = 0.01;

pub const DEFAULT_INCLUDE: &[&str] = &["skin"];
pub const DEFAULT_EXCLUDE: &[&str] = &["nose", "upper_lip", "lower_lip"];

const BUILTIN_CLASS_MAP: &str = include_str!("../../config/class_map.json");

/// Class name → label id table, as stored in `{ "classes": { name: id } }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    pub classes: BTreeMap<String, u8>,
}

impl ClassMap {
    /// The face-parsing label table shipped in `config/class_map.json`.
    pub fn face_parsing() -> Self {
        Self::from_json(BUILTIN_CLASS_MAP).expect("bundled class map is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, MaskError> {
        let map: ClassMap =
            serde_json::from_str(text).map_err(|e| MaskError::InvalidClassMap(e.to_string()))?;
        if map.classes.is_empty() {
            return Err(MaskError::InvalidClassMap("no classes defined".into()));
        }
        if map.classes.values().any(|&id| id == UNKNOWN_ID) {
            return Err(MaskError::InvalidClassMap(format!(
                "id {UNKNOWN_ID} is reserved for unknown labels"
            )));
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MaskError> {
        let bytes = crate::imaging::read_file_bytes(path.as_ref())?;
        let text = String::from_utf8(bytes)
            .map_err(|_| MaskError::InvalidClassMap("class map is not UTF-8".into()))?;
        Self::from_json(&text)
    }

    pub fn id(&self, name: &str) -> Result<u8, MaskError> {
        self.classes
            .get(name)
            .copied()
            .ok_or_else(|| MaskError::UnknownClassName(name.to_string()))
    }

    fn contains_id(&self, id: u8) -> bool {
        self.classes.values().any(|&v| v == id)
    }
}

/// Per-pixel semantic class ids with their class table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: u32,
    height: u32,
    labels: Vec<u8>,
    class_map: ClassMap,
}

impl LabelMask {
    /// Builds a label mask; ids missing from `class_map` become [`UNKNOWN_ID`].
    pub fn new(width: u32, height: u32, labels: Vec<u8>, class_map: ClassMap) -> Result<Self, MaskError> {
        if labels.len() != width as usize * height as usize {
            return Err(MaskError::DimensionMismatch {
                a: (width, height),
                b: (labels.len() as u32, 1),
            });
        }
        let known: HashSet<u8> = class_map.classes.values().copied().collect();
        let labels = labels
            .into_iter()
            .map(|id| if known.contains(&id) { id } else { UNKNOWN_ID })
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            class_map,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_map(&self) -> &ClassMap {
        &self.class_map
    }

    pub fn class_mask(&self, name: &str) -> Result<BinaryMask, MaskError> {
        let id = self.class_map.id(name)?;
        BinaryMask::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l == id).collect(),
        )
    }
}

pub fn load_label_mask(path: impl AsRef<Path>, class_map: &ClassMap) -> Result<LabelMask, MaskError> {
    load_label_mask_with_limit(path, class_map, DEFAULT_UNKNOWN_LIMIT)
}

/// Reads a single-channel 8-bit PNG whose values are class ids.
pub fn load_label_mask_with_limit(
    path: impl AsRef<Path>,
    class_map: &ClassMap,
    unknown_limit: f64,
) -> Result<LabelMask, MaskError> {
    let path = path.as_ref();
    let bytes = crate::imaging::read_file_bytes(path)?;
    let not_single = |detail: String| MaskError::NotSingleChannel {
        path: path.to_path_buf(),
        detail,
    };
    match image::guess_format(&bytes) {
        Ok(ImageFormat::Png) => {}
        _ => {
            return Err(ImagingError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "label map must be PNG".into(),
            }
            .into())
        }
    }
    match crate::imaging::png_ihdr(&bytes) {
        Some((8, 0)) => {}
        Some((depth, color_type)) => {
            return Err(not_single(format!("bit depth {depth}, color type {color_type}")))
        }
        None => {
            return Err(ImagingError::Corrupt {
                path: path.to_path_buf(),
                detail: "missing IHDR chunk".into(),
            }
            .into())
        }
    }
    let decoded = image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| {
        ImagingError::Corrupt {
            path: path.to_path_buf(),
            detail: e.to_string(),
        }
    })?;
    let gray = match decoded {
        DynamicImage::ImageLuma8(g) => g,
        other => return Err(not_single(format!("{:?}", other.color()))),
    };
    let (width, height) = gray.dimensions();
    let raw = gray.into_raw();
    let mut unknown = 0usize;
    let mut example = None;
    for &id in &raw {
        if !class_map.contains_id(id) {
            unknown += 1;
            example.get_or_insert(id);
        }
    }
    let fraction = unknown as f64 / raw.len().max(1) as f64;
    if fraction > unknown_limit {
        return Err(MaskError::UnknownIds {
            path: path.to_path_buf(),
            fraction,
            limit: unknown_limit,
            example: example.unwrap_or(UNKNOWN_ID),
        });
    }
    LabelMask::new(width, height, raw, class_map.clone())
}

/// True where the class is in `include` and not in `exclude`.
pub fn select_skin(mask: &LabelMask, include: &[&str], exclude: &[&str]) -> Result<BinaryMask, MaskError> {
    let map = mask.class_map();
    let include: HashSet<u8> = include.iter().map(|n| map.id(n)).collect::<Result<_, _>>()?;
    let exclude: HashSet<u8> = exclude.iter().map(|n| map.id(n)).collect::<Result<_, _>>()?;
    let bits = mask
        .labels()
        .iter()
        .map(|id| include.contains(id) && !exclude.contains(id))
        .collect();
    BinaryMask::new(mask.width(), mask.height(), bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_map_has_required_names() {
        let map = ClassMap::face_parsing();
        for name in ["skin", "nose", "upper_lip", "lower_lip", "hair", "background"] {
            assert!(map.id(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn unknown_ids_are_remapped() {
        let map = ClassMap::from_json(r#"{"classes":{"skin":1}}"#).unwrap();
        let lm = LabelMask::new(2, 1, vec![1, 7], map).unwrap();
        assert_eq!(lm.labels(), &[1, UNKNOWN_ID]);
    }

    #[test]
    fn select_excludes_nose() {
        let map = ClassMap::face_parsing();
        let skin = map.id("skin").unwrap();
        let nose = map.id("nose").unwrap();
        let labels = (0..20u32)
            .flat_map(|y| (0..20u32).map(move |x| (x, y)))
            .map(|(x, y)| if (5..9).contains(&x) && (6..12).contains(&y) { nose } else { skin })
            .collect();
        let lm = LabelMask::new(20, 20, labels, map).unwrap();
        let m = select_skin(&lm, DEFAULT_INCLUDE, DEFAULT_EXCLUDE).unwrap();
        for y in 0..20 {
            for x in 0..20 {
                let in_nose = (5..9).contains(&x) && (6..12).contains(&y);
                assert_eq!(m.get(x, y), !in_nose);
            }
        }
    }

    #[test]
    fn typo_is_rejected() {
        let lm = LabelMask::new(1, 1, vec![1], ClassMap::face_parsing()).unwrap();
        assert!(matches!(
            select_skin(&lm, &["skinn"], &[]),
            Err(MaskError::UnknownClassName(n)) if n == "skinn"
        ));
    }

    #[test]
    fn reserved_id_rejected() {
        assert!(ClassMap::from_json(r#"{"classes":{"skin":255}}"#).is_err());
        assert!(ClassMap::from_json(r#"{"classes":{}}"#).is_err());
        assert!(ClassMap::from_json("not json").is_err());
    }
}
