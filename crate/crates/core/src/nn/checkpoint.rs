//! ACAP checkpoints: `"ACAP"`, u32 version, u32 tensor count, then per
//! tensor a u16 name length, the UTF-8 name, a u8 rank, `rank` u32 dims and
//! the f32 payload. All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use ndarray::{ArrayD, ArrayViewD, IxDyn};

use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"ACAP";
const VERSION: u32 = 1;

/// A named tensor as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn from_view(view: &ArrayViewD<'_, f64>) -> Self {
        Self {
            dims: view.shape().to_vec(),
            data: view.iter().map(|&x| x as f32).collect(),
        }
    }

    pub fn to_array(&self) -> ArrayD<f64> {
        ArrayD::from_shape_vec(IxDyn(&self.dims), self.data.iter().map(|&x| x as f64).collect())
            .expect("tensor dims match payload")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.push((name.into(), tensor));
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    /// Fetch a tensor and verify its shape.
    pub fn expect(&self, name: &str, dims: &[usize]) -> Result<&Tensor> {
        let t = self.get(name)?;
        if t.dims != dims {
            return Err(Error::ShapeMismatch {
                name: name.to_string(),
                expected: dims.to_vec(),
                found: t.dims.clone(),
            });
        }
        Ok(t)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.dims.len() as u8);
            for &d in &t.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let found: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
        if found != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found,
            });
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let count = r.u32("tensor count")? as usize;
        let mut ckpt = Checkpoint::default();
        for _ in 0..count {
            let len = u16::from_le_bytes(r.take(2, "name length")?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(r.take(len, "tensor name")?)
                .map_err(|e| Error::Parse(format!("tensor name is not UTF-8: {e}")))?
                .to_string();
            let rank = r.take(1, "rank")?[0] as usize;
            let dims = (0..rank)
                .map(|_| r.u32("dims").map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().product();
            let payload = r.take(n * 4, &name)?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            ckpt.push(name, Tensor { dims, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::Parse(format!(
                "{} trailing bytes after checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(ckpt)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::TruncatedPayload(format!("checkpoint ends inside {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn write_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ckpt.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Checkpoint {
        let mut c = Checkpoint::default();
        c.push("a.w", Tensor { dims: vec![2, 3], data: vec![1.0, -2.0, 3.5, 0.0, 1e-7, 9.0] });
        c.push("b", Tensor { dims: vec![1], data: vec![0.25] });
        c
    }

    #[test]
    fn layout() {
        let bytes = sample().encode();
        assert_eq!(&bytes[..12], b"ACAP\x01\0\0\0\x02\0\0\0");
        assert_eq!(&bytes[12..14], &3u16.to_le_bytes());
        assert_eq!(&bytes[14..17], b"a.w");
        assert_eq!(bytes[17], 2);
        assert_eq!(&bytes[18..26], b"\x02\0\0\0\x03\0\0\0");
    }

    #[test]
    fn truncated_and_bad_magic() {
        let bytes = sample().encode();
        for cut in [3, 11, 20, bytes.len() - 1] {
            assert!(matches!(
                Checkpoint::decode(&bytes[..cut]),
                Err(Error::TruncatedPayload(_))
            ));
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::decode(&bad), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn lookup_errors() {
        let c = sample();
        assert!(matches!(c.get("zzz"), Err(Error::MissingTensor(_))));
        assert!(matches!(c.expect("b", &[2]), Err(Error::ShapeMismatch { .. })));
        assert!(c.expect("a.w", &[2, 3]).is_ok());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            values in proptest::collection::vec(proptest::num::f32::ANY, 0..64),
            name in "[a-z_.]{1,20}",
        ) {
            let mut c = Checkpoint::default();
            c.push(name, Tensor { dims: vec![values.len()], data: values.clone() });
            let back = Checkpoint::decode(&c.encode()).unwrap();
            let got = &back.tensors[0].1.data;
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
