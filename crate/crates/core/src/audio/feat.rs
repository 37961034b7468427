//! FEAT container: `"FEAT"`, u32 version (1), u32 rows, u32 cols, then
//! rows·cols little-endian f32 values in row-major order.

use std::fs;
use std::path::Path;

use super::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 128;
const MAGIC: [u8; 4] = *b"FEAT";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub(crate) fn encode_feat(rows: usize, cols: usize, data: &[f32]) -> Vec<u8> {
    assert_eq!(rows * cols, data.len());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Returns `(rows, cols, values)`.
pub(crate) fn decode_feat(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload(format!(
            "{} bytes is shorter than the FEAT header",
            bytes.len()
        )));
    }
    let found: [u8; 4] = bytes[0..4].try_into().unwrap();
    if found != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC,
            found,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::TruncatedPayload("header sizes overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload(format!(
            "{rows}x{cols} needs {expected} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Parse(format!(
            "{} trailing bytes after FEAT payload",
            payload.len() - expected
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, data))
}

pub fn write_feature_file(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_feat(features.rows, features.cols, &features.data))
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn read_feat(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_feat(&bytes)
}

pub(crate) fn write_feat(path: &Path, rows: usize, cols: usize, data: &[f32]) -> Result<()> {
    fs::write(path, encode_feat(rows, cols, data)).map_err(|e| Error::io(path, e))
}

/// Read any FEAT feature file. 128-column files are tagged as embeddings,
/// everything else as log-mel.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let (rows, cols, data) = read_feat(path.as_ref())?;
    if rows == 0 {
        return Err(Error::EmptyFeature);
    }
    let kind = if cols == EMBEDDING_DIM {
        FeatureKind::Embedding
    } else {
        FeatureKind::LogMel
    };
    FeatureMatrix::new(rows, cols, data, kind)
}

/// Read precomputed 128-d frame embeddings.
pub fn load_embedding_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let bytes = fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    load_embedding_bytes(&bytes)
}

fn load_embedding_bytes(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() >= HEADER_LEN && bytes[0..4] == MAGIC {
        let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if cols != EMBEDDING_DIM {
            return Err(Error::DimensionMismatch(format!(
                "embedding file has {cols} columns, expected {EMBEDDING_DIM}"
            )));
        }
        if rows == 0 {
            return Err(Error::EmptyFeature);
        }
    }
    let (rows, cols, data) = decode_feat(bytes)?;
    FeatureMatrix::new(rows, cols, data, FeatureKind::Embedding)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_one_embedding_frames() {
        let data: Vec<f32> = (0..31 * 128).map(|i| (i as f32).sin()).collect();
        let m = load_embedding_bytes(&encode_feat(31, 128, &data)).unwrap();
        assert_eq!((m.rows, m.cols, m.kind), (31, 128, FeatureKind::Embedding));
        assert_eq!(m.data, data);
    }

    #[test]
    fn zero_rows_is_empty() {
        assert!(matches!(
            load_embedding_bytes(&encode_feat(0, 128, &[])),
            Err(Error::EmptyFeature)
        ));
    }

    #[test]
    fn wrong_width_is_rejected() {
        assert!(matches!(
            load_embedding_bytes(&encode_feat(2, 64, &[0.0; 128])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = encode_feat(2, 128, &[1.0; 256]);
        bytes.truncate(bytes.len() - 1);
        assert!(matches!(
            load_embedding_bytes(&bytes),
            Err(Error::TruncatedPayload(_))
        ));
        bytes[0] = b'X';
        assert!(matches!(decode_feat(&bytes), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn header_layout_is_little_endian() {
        let bytes = encode_feat(1, 2, &[1.0, -2.0]);
        assert_eq!(&bytes[..16], b"FEAT\x01\0\0\0\x01\0\0\0\x02\0\0\0");
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 24);
    }
}
