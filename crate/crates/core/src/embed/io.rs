//! Binary parameter files.
//!
//! Layout, all integers little-endian:
//! `b"PSNT"`, `u32` version, `u32` length + UTF-8 config digest,
//! `u32` length + UTF-8 network config JSON, `u32` block count, then per
//! block: `u32` length + UTF-8 name, `u32` rank, `rank x u32` dims and the
//! values as `f32`.

use std::path::Path;

use super::config::NetConfig;
use super::net::{NetParams, ParamBlock};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PSNT";
pub const PARAMS_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_params(params: &NetParams, digest: &str) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, PARAMS_VERSION);
    put_str(&mut out, digest);
    put_str(&mut out, &serde_json::to_string(&params.config).expect("config serializes"));
    put_u32(&mut out, params.blocks.len() as u32);
    for b in &params.blocks {
        put_str(&mut out, &b.name);
        put_u32(&mut out, b.shape.len() as u32);
        for &d in &b.shape {
            put_u32(&mut out, d as u32);
        }
        for &v in &b.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| e.to_string())
    }
}

/// Decodes a parameter file, returning the parameters and the recorded
/// config digest.
pub fn decode_params(bytes: &[u8]) -> std::result::Result<(NetParams, String), String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not a parameter file".into());
    }
    let version = r.u32()?;
    if version != PARAMS_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let digest = r.string()?;
    let config: NetConfig = serde_json::from_str(&r.string()?).map_err(|e| e.to_string())?;
    let count = r.u32()? as usize;
    let mut blocks = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name = r.string()?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let values = r
            .take(n.checked_mul(4).ok_or("block too large")?)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        blocks.push(ParamBlock { name, shape, values });
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    let params = NetParams::from_blocks(&config, blocks).map_err(|e| e.to_string())?;
    Ok((params, digest))
}

pub fn save_params(path: &Path, params: &NetParams, digest: &str) -> Result<()> {
    std::fs::write(path, encode_params(params, digest)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<(NetParams, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_params(&bytes).map_err(|msg| Error::format(path, msg))
}
