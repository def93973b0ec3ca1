//! Binary field snapshots (`.nlsf`) with a JSON sidecar.
//!
//! Layout, all little-endian: `b"NLSF"`, version `u32`, `n` `u32`, `R` `f64`,
//! then `n` pairs `(re, im)` of `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::RadialField;
use super::grid::RadialGrid;
use crate::error::{NlsError, Result};

pub const MAGIC: &[u8; 4] = b"NLSF";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SnapshotMeta {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub kmax: f64,
    pub version: u32,
    #[serde(default)]
    pub time: Option<f64>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn encode(field: &RadialField) -> Vec<u8> {
    let n = field.values().len();
    let mut buf = Vec::with_capacity(20 + 16 * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&field.grid().radius().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    buf
}

pub fn decode(bytes: &[u8]) -> Result<RadialField> {
    let mut cur = bytes;
    let mut take = |k: usize| -> Result<&[u8]> {
        if cur.len() < k {
            return Err(NlsError::Format("truncated snapshot".into()));
        }
        let (head, tail) = cur.split_at(k);
        cur = tail;
        Ok(head)
    };
    if take(4)? != MAGIC {
        return Err(NlsError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(NlsError::Format(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let radius = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let re = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let im = f64::from_le_bytes(take(8)?.try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    if !cur.is_empty() {
        return Err(NlsError::Format("trailing bytes after samples".into()));
    }
    let grid = RadialGrid::new(n, radius)?;
    RadialField::new(grid, values)
}

/// Writes `path` and its sidecar `path.json`.
pub fn write_snapshot(
    path: &Path,
    field: &RadialField,
    time: Option<f64>,
    provenance: serde_json::Value,
) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode(field))?;
    let meta = SnapshotMeta {
        n: field.grid().n(),
        radius: field.grid().radius(),
        kmax: field.grid().kmax(),
        version: VERSION,
        time,
        provenance,
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<RadialField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Reads the sidecar if it exists.
pub fn read_meta(path: &Path) -> Result<Option<SnapshotMeta>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_slice(&fs::read(side)?)?))
}
