//! Shared binary layout for frame-indexed feature and track files.
//!
//! Little-endian: 4-byte magic, version `u32`, optional kind byte,
//! dims `u32`, frame period in microseconds `u32`, frame count `u32`,
//! then `frame count × dims` `f32` values, row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const FRAME_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub kind: Option<u8>,
    pub frame_period_us: u32,
    pub frames: Tensor,
}

pub fn encode(magic: &[u8; 4], file: &FrameFile) -> Vec<u8> {
    let (n, d) = (file.frames.rows(), file.frames.cols());
    let mut out = Vec::with_capacity(21 + n * d * 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FRAME_FILE_VERSION.to_le_bytes());
    if let Some(k) = file.kind {
        out.push(k);
    }
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&file.frame_period_us.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in file.frames.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode(magic: &[u8; 4], with_kind: bool, bytes: &[u8]) -> std::result::Result<FrameFile, String> {
    let header = if with_kind { 21 } else { 20 };
    if bytes.len() < header {
        return Err("file shorter than header".into());
    }
    if &bytes[..4] != magic {
        return Err(format!(
            "bad magic, expected {}",
            String::from_utf8_lossy(magic)
        ));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FRAME_FILE_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let (kind, base) = if with_kind { (Some(bytes[8]), 9) } else { (None, 8) };
    let dims = u32_at(base) as usize;
    let frame_period_us = u32_at(base + 4);
    let count = u32_at(base + 8) as usize;
    if dims == 0 || count == 0 {
        return Err("empty frame matrix".into());
    }
    let expected = header + dims * count * 4;
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes, found {}", bytes.len()));
    }
    let data = bytes[header..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let frames = Tensor::matrix(count, dims, data).map_err(|e| e.to_string())?;
    if !frames.is_finite() {
        return Err("non-finite frame values".into());
    }
    Ok(FrameFile {
        kind,
        frame_period_us,
        frames,
    })
}

pub fn write(path: &Path, magic: &[u8; 4], file: &FrameFile) -> Result<()> {
    fs::write(path, encode(magic, file)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path, magic: &[u8; 4], with_kind: bool) -> Result<FrameFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(magic, with_kind, &bytes).map_err(|msg| Error::format(path, msg))
}

/// Whether the file at `path` starts with `magic`.
pub fn has_magic(path: &Path, magic: &[u8; 4]) -> bool {
    use std::io::Read;
    let mut buf = [0u8; 4];
    fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut buf))
        .map(|_| &buf == magic)
        .unwrap_or(false)
}
