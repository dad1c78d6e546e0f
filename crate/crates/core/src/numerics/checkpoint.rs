//! Binary parameter checkpoints.
//!
//! Layout (little-endian): magic `ARCN`, format version `u32`, record
//! count `u32`, then per record: name length `u32`, UTF-8 name, rank
//! `u32`, each dimension `u32`, `f64` payload. The step counter follows
//! as a trailing `u64`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{ParameterSet, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ARCN";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(params: &ParameterSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.total_len() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, value) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(value.shape().len() as u32).to_le_bytes());
        for &d in value.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&params.step().to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<ParameterSet, String> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4)? != CHECKPOINT_MAGIC {
        return Err("bad magic".into());
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let count = c.u32()?;
    let mut params = ParameterSet::new();
    for _ in 0..count {
        let len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(len)?)
            .map_err(|e| format!("bad parameter name: {e}"))?
            .to_string();
        let rank = c.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(c.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = c.take(n * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| e.to_string())?;
        params.add(name, t).map_err(|e| e.to_string())?;
    }
    let step = u64::from_le_bytes(c.take(8)?.try_into().unwrap());
    if c.pos != bytes.len() {
        return Err("trailing bytes".into());
    }
    params.set_step(step);
    Ok(params)
}

pub fn save_checkpoint(params: &ParameterSet, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_checkpoint(params))
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ParameterSet> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|msg| Error::format(path, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            values in prop::collection::vec(prop::num::f64::ANY, 1..40),
            cols in 1usize..5,
            step in any::<u64>(),
        ) {
            let rows = values.len() / cols;
            prop_assume!(rows > 0);
            let data = values[..rows * cols].to_vec();
            let mut ps = ParameterSet::new();
            ps.add("layer.w", Tensor::matrix(rows, cols, data.clone()).unwrap()).unwrap();
            ps.add("b", Tensor::new(vec![1, 1, 2], vec![1.5, -0.0]).unwrap()).unwrap();
            ps.set_step(step);
            let bytes = encode_checkpoint(&ps);
            let back = decode_checkpoint(&bytes).unwrap();
            prop_assert_eq!(encode_checkpoint(&back), bytes);
            prop_assert_eq!(back.step(), step);
            let got: Vec<u64> = back.value(back.id("layer.w").unwrap()).data().iter().map(|v| v.to_bits()).collect();
            let want: Vec<u64> = data.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn rejects_corruption() {
        let mut ps = ParameterSet::new();
        ps.add("w", Tensor::scalar(1.0)).unwrap();
        let bytes = encode_checkpoint(&ps);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).is_err());
        assert_eq!(&bytes[..4], b"ARCN");
    }
}
