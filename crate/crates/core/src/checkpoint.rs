//! Binary model checkpoints: a magic tag, a length-prefixed JSON header, then the flat
//! parameter vector as little-endian `f64`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::write_atomic;

const MAGIC: &[u8; 8] = b"CNCPTCK1";

pub fn encode<H: Serialize>(header: &H, params: &[f64]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(8 + 16 + json.len() + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint("truncated checkpoint".into()));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn take_u64(bytes: &mut &[u8]) -> Result<u64> {
    let b = take(bytes, 8)?;
    Ok(u64::from_le_bytes(b.try_into().expect("eight bytes")))
}

pub fn decode<H: DeserializeOwned>(mut bytes: &[u8]) -> Result<(H, Vec<f64>)> {
    if take(&mut bytes, 8)? != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint (bad magic)".into()));
    }
    let header_len = take_u64(&mut bytes)? as usize;
    let header: H = serde_json::from_slice(take(&mut bytes, header_len)?)
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    let count = take_u64(&mut bytes)? as usize;
    let raw = take(&mut bytes, count.checked_mul(8).ok_or_else(|| Error::Checkpoint("parameter count overflow".into()))?)?;
    if !bytes.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len())));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    Ok((header, params))
}

pub fn save<H: Serialize>(path: &Path, header: &H, params: &[f64]) -> Result<()> {
    write_atomic(path, &encode(header, params)?)
}

pub fn load<H: DeserializeOwned>(path: &Path) -> Result<(H, Vec<f64>)> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
