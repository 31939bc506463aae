//! Quantized integer tensors and their flat binary file format.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! offset  size      field
//! 0       4         magic  b"QTNS"
//! 4       1         version (1)
//! 5       1         element width in bits (1 or 8)
//! 6       1         number of dims, 1..=4
//! 7       1         reserved, 0
//! 8       4*ndim    dims, u32 each, outermost first
//! ...     payload   8-bit: one two's-complement byte per element, row-major
//!                   1-bit: ceil(len/8) bytes, element i at bit (i % 8) of byte i / 8
//! ```

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"QTNS";
const VERSION: u8 = 1;
const MAX_DIMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTensor {
    dims: Vec<usize>,
    bits: u8,
    data: Vec<i8>,
}

impl QuantTensor {
    fn build(dims: Vec<usize>, bits: u8, data: Vec<i8>) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_DIMS {
            return Err(Error::dim(format!("tensor rank must be 1..={MAX_DIMS}, got {}", dims.len())));
        }
        let len = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if len != Some(data.len()) {
            return Err(Error::dim(format!("dims {dims:?} do not match {} elements", data.len())));
        }
        Ok(QuantTensor { dims, bits, data })
    }

    /// A 1-bit tensor; every element must be 0 or 1.
    pub fn spikes(dims: Vec<usize>, data: Vec<i8>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|&&x| x != 0 && x != 1) {
            return Err(Error::validation(format!("spike tensors hold only 0/1, found {bad}")));
        }
        Self::build(dims, 1, data)
    }

    pub fn int8(dims: Vec<usize>, data: Vec<i8>) -> Result<Self> {
        Self::build(dims, 8, data)
    }

    pub fn zeros(dims: Vec<usize>, bits: u8) -> Result<Self> {
        let len = dims.iter().product();
        match bits {
            1 | 8 => Self::build(dims, bits, vec![0; len]),
            _ => Err(Error::validation("element width must be 1 or 8 bits")),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<i8> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0).count()
    }

    pub fn density(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.count_nonzero() as f64 / self.data.len() as f64
        }
    }

    pub(crate) fn expect(&self, bits: u8, dims: &[usize], what: &str) -> Result<()> {
        if self.bits != bits {
            return Err(Error::dim(format!("{what}: expected {bits}-bit tensor, got {}-bit", self.bits)));
        }
        if self.dims != dims {
            return Err(Error::dim(format!("{what}: expected dims {dims:?}, got {:?}", self.dims)));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + self.data.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.bits);
        out.push(self.dims.len() as u8);
        out.push(0);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        if self.bits == 1 {
            let mut packed = vec![0u8; self.data.len().div_ceil(8)];
            for (i, &x) in self.data.iter().enumerate() {
                if x != 0 {
                    packed[i / 8] |= 1 << (i % 8);
                }
            }
            out.extend_from_slice(&packed);
        } else {
            out.extend(self.data.iter().map(|&x| x as u8));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::TensorFormat(m.to_string());
        if bytes.len() < 8 || bytes[..4] != MAGIC {
            return Err(bad("missing magic"));
        }
        if bytes[4] != VERSION {
            return Err(bad("unsupported version"));
        }
        let bits = bytes[5];
        let ndim = bytes[6] as usize;
        if bits != 1 && bits != 8 {
            return Err(bad("element width must be 1 or 8"));
        }
        if ndim == 0 || ndim > MAX_DIMS {
            return Err(bad("bad rank"));
        }
        let header = 8 + 4 * ndim;
        if bytes.len() < header {
            return Err(bad("truncated header"));
        }
        let dims: Vec<usize> =
            bytes[8..header].chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize).collect();
        let len = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| bad("dims overflow"))?;
        let payload = &bytes[header..];
        let data = if bits == 1 {
            if payload.len() != len.div_ceil(8) {
                return Err(bad("payload length does not match dims"));
            }
            (0..len).map(|i| ((payload[i / 8] >> (i % 8)) & 1) as i8).collect()
        } else {
            if payload.len() != len {
                return Err(bad("payload length does not match dims"));
            }
            payload.iter().map(|&b| b as i8).collect()
        };
        Self::build(dims, bits, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(&bytes)
    }
}
