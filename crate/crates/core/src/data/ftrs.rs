//! FTRS binary feature files.
//!
//! Layout, all little-endian:
//!
//! | offset | size  | field                         |
//! |--------|-------|-------------------------------|
//! | 0      | 4     | magic `FTRS`                  |
//! | 4      | 4     | version (u32) = 1             |
//! | 8      | 8     | n (u64)                       |
//! | 16     | 8     | d (u64)                       |
//! | 24     | 4     | class count C (u32)           |
//! | 28     | 4     | dtype (u32), 0 = f32          |
//! | 32     | 4n    | labels (i32)                  |
//! | 32+4n  | 4nd   | features, row-major (f32)     |

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::FeatureSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const FTRS_MAGIC: &[u8; 4] = b"FTRS";
pub const FTRS_VERSION: u32 = 1;
pub const FTRS_HEADER_LEN: usize = 32;
const DTYPE_F32: u32 = 0;

pub fn read_feature_file<T: Real>(path: impl AsRef<Path>) -> Result<FeatureSet<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_feature_file(&bytes, name)
}

/// Writes `set` as FTRS. Values that are not finite as `f32` are rejected
/// before anything touches the filesystem.
pub fn write_feature_file<T: Real>(set: &FeatureSet<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_feature_file(set)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_feature_file<T: Real>(set: &FeatureSet<T>) -> Result<Vec<u8>> {
    let (n, d) = set.features().dim();
    let classes =
        u32::try_from(set.class_count()).map_err(|_| Error::InvalidConfig("class count exceeds u32".into()))?;
    let mut out = Vec::with_capacity(FTRS_HEADER_LEN + 4 * n + 4 * n * d);
    out.extend_from_slice(FTRS_MAGIC);
    out.extend_from_slice(&FTRS_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&classes.to_le_bytes());
    out.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for &l in set.labels() {
        let l = i32::try_from(l).map_err(|_| Error::InvalidConfig("label exceeds i32".into()))?;
        out.extend_from_slice(&l.to_le_bytes());
    }
    for (record, row) in set.features().rows().into_iter().enumerate() {
        for (column, &v) in row.iter().enumerate() {
            let v = v.as_f64() as f32;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { record, column });
            }
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode_feature_file<T: Real>(bytes: &[u8], name: impl Into<String>) -> Result<FeatureSet<T>> {
    let header = |offset: u64, reason: &str| Error::MalformedHeader {
        offset,
        reason: reason.to_string(),
    };
    if bytes.len() < FTRS_HEADER_LEN {
        return Err(header(
            bytes.len() as u64,
            &format!("file is {} bytes, header needs {}", bytes.len(), FTRS_HEADER_LEN),
        ));
    }
    if &bytes[0..4] != FTRS_MAGIC {
        return Err(header(0, "bad magic, expected \"FTRS\""));
    }
    let version = u32_at(bytes, 4);
    if version != FTRS_VERSION {
        return Err(header(4, &format!("unsupported version {version}")));
    }
    let n = u64_at(bytes, 8);
    let d = u64_at(bytes, 16);
    let classes = u32_at(bytes, 24);
    let dtype = u32_at(bytes, 28);
    if n == 0 {
        return Err(header(8, "n must be >= 1"));
    }
    if d == 0 {
        return Err(header(16, "d must be >= 1"));
    }
    if classes == 0 {
        return Err(header(24, "class count must be >= 1"));
    }
    if dtype != DTYPE_F32 {
        return Err(header(28, &format!("unsupported dtype code {dtype}")));
    }
    let expected = n
        .checked_mul(d)
        .and_then(|nd| nd.checked_add(n))
        .and_then(|w| w.checked_mul(4))
        .and_then(|p| p.checked_add(FTRS_HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(Error::DimensionMismatch(format!(
            "header declares n={n}, d={d} ({} bytes) but file has {} bytes",
            expected.map_or_else(|| "overflowing".to_string(), |e| e.to_string()),
            bytes.len()
        )));
    }
    let (n, d) = (n as usize, d as usize);
    let classes = classes as usize;

    let mut labels = Vec::with_capacity(n);
    for record in 0..n {
        let l = i32::from_le_bytes(bytes[FTRS_HEADER_LEN + 4 * record..][..4].try_into().unwrap());
        if l < 0 || l as usize >= classes {
            return Err(Error::LabelOutOfRange {
                record,
                label: l as i64,
                classes,
            });
        }
        labels.push(l as u32);
    }
    let payload = &bytes[FTRS_HEADER_LEN + 4 * n..];
    let mut values = Vec::with_capacity(n * d);
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                record: k / d,
                column: k % d,
            });
        }
        values.push(T::lit(v as f64));
    }
    let features = Array2::from_shape_vec((n, d), values).expect("length checked against header");
    FeatureSet::new(name, features, labels, classes)
}
