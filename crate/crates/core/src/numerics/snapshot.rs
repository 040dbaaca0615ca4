//! Flat binary parameter snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "PIFSNAP1"
//! count      u32      number of tensors
//! table      count x { name_len u32, name utf-8, ndim u32, dims u64 x ndim }
//! payload    each tensor's data, in table order, row-major f64 LE
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const MAGIC: &[u8; 8] = b"PIFSNAP1";

pub fn encode(tensors: &[(&str, &Tensor)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for (_, t) in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("snapshot truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(buf: &[u8]) -> Result<Vec<(String, Tensor)>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a parameter snapshot (bad magic)".into()));
    }
    let count = r.u32()? as usize;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Format("snapshot tensor name is not utf-8".into()))?
            .to_string();
        let ndim = r.u32()? as usize;
        let dims = (0..ndim)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        table.push((name, dims));
    }
    let mut out = Vec::with_capacity(count);
    for (name, dims) in table {
        let n: usize = dims.iter().product();
        let data = r
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Tensor::from_vec(&dims, data)?));
    }
    if r.pos != buf.len() {
        return Err(Error::Format("trailing bytes after snapshot payload".into()));
    }
    Ok(out)
}

pub fn write(path: &Path, tensors: &[(&str, &Tensor)]) -> Result<()> {
    std::fs::write(path, encode(tensors)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let b = encode(&[("w", &t)]);
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        // count + name_len + "w" + ndim + one dim + 2 doubles
        assert_eq!(b.len(), 8 + 4 + 4 + 1 + 4 + 8 + 16);
        assert_eq!(f64::from_le_bytes(b[b.len() - 8..].try_into().unwrap()), 2.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode(b"nope").is_err());
        let t = Tensor::zeros(&[3]);
        let mut b = encode(&[("x", &t)]);
        b.pop();
        assert!(decode(&b).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let a = Tensor::uniform_fan_in(&[rows, cols], 1, &mut rng);
            let b = Tensor::uniform_fan_in(&[cols], 1, &mut rng);
            let back = decode(&encode(&[("a", &a), ("b.bias", &b)])).unwrap();
            prop_assert_eq!(back.len(), 2);
            prop_assert_eq!(&back[0].0, "a");
            prop_assert_eq!(&back[0].1, &a);
            prop_assert_eq!(&back[1].1, &b);
        }
    }
}
