//! Binary ΔA map files: `ERYDMAP1`, width and height as little-endian u32,
//! `width·height` little-endian f32 values, then one domain byte per pixel.

use std::path::Path;

use super::{DeltaMap, ErythemaError};
use crate::imaging::ImagingError;
use crate::masking::BinaryMask;

const MAGIC: &[u8; 8] = b"ERYDMAP1";
const HEADER_LEN: usize = 16;

pub fn save_delta_map(map: &DeltaMap, path: impl AsRef<Path>) -> Result<(), ErythemaError> {
    let n = map.values().len();
    let mut buf = Vec::with_capacity(HEADER_LEN + 5 * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&map.width().to_le_bytes());
    buf.extend_from_slice(&map.height().to_le_bytes());
    for v in map.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend(map.domain().as_slice().iter().map(|&d| d as u8));
    std::fs::write(path.as_ref(), buf).map_err(|source| {
        ImagingError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
        .into()
    })
}

pub fn load_delta_map(path: impl AsRef<Path>) -> Result<DeltaMap, ErythemaError> {
    let path = path.as_ref();
    let bytes = crate::imaging::read_file_bytes(path)?;
    let invalid = |detail: &str| ErythemaError::InvalidDeltaMap {
        path: path.display().to_string(),
        detail: detail.to_string(),
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(invalid("missing header"));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let height = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    let n = width as usize * height as usize;
    if bytes.len() != HEADER_LEN + 5 * n {
        return Err(invalid("length does not match dimensions"));
    }
    let body = &bytes[HEADER_LEN..];
    let values = body[..4 * n]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let flags = &body[4 * n..];
    if flags.iter().any(|&b| b > 1) {
        return Err(invalid("domain flags must be 0 or 1"));
    }
    let domain = BinaryMask::new(width, height, flags.iter().map(|&b| b == 1).collect())?;
    DeltaMap::new(width, height, values, domain)
}
