//! OAT1 tensor interchange format.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size      | field                          |
//! |--------|-----------|--------------------------------|
//! | 0      | 4         | magic `b"OAT1"`                |
//! | 4      | 1         | dtype code (`1` = f32)         |
//! | 5      | 1         | ndim                           |
//! | 6      | 8 * ndim  | dims as u64                    |
//! | ...    | 4 * count | row-major f32 payload          |
//!
//! Readers reject trailing bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"OAT1";
pub const DTYPE_F32: u8 = 1;

/// A dense row-major tensor as stored on disk.
///
/// Values are kept in their 32-bit file representation so that a
/// load/write cycle is bit-exact; use [`Tensor::to_f64`] for arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(Error::dim("tensor element count", count, data.len()));
        }
        if dims.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "tensor rank {} exceeds 255",
                dims.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    /// Builds a tensor from 64-bit values, rounding to f32.
    pub fn from_f64(dims: Vec<usize>, data: &[f64]) -> Result<Self> {
        Tensor::new(dims, data.iter().map(|&v| v as f32).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f32>) {
        (self.dims, self.data)
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check_finite()?;
        let mut out = Vec::with_capacity(6 + 8 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(DTYPE_F32);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic {
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        let header = |need: usize| {
            if bytes.len() < need {
                Err(Error::TruncatedPayload {
                    expected: need,
                    found: bytes.len(),
                })
            } else {
                Ok(())
            }
        };
        header(6)?;
        let dtype = bytes[4];
        if dtype != DTYPE_F32 {
            return Err(Error::UnsupportedDtype(dtype));
        }
        let ndim = bytes[5] as usize;
        let dims_end = 6 + 8 * ndim;
        header(dims_end)?;
        let mut dims = Vec::with_capacity(ndim);
        let mut count: usize = 1;
        for chunk in bytes[6..dims_end].chunks_exact(8) {
            let d = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            let d = usize::try_from(d)
                .map_err(|_| Error::InvalidArgument(format!("dimension {d} overflows usize")))?;
            count = count
                .checked_mul(d)
                .ok_or_else(|| Error::InvalidArgument("element count overflows usize".into()))?;
            dims.push(d);
        }
        let payload = &bytes[dims_end..];
        let expected = count
            .checked_mul(4)
            .ok_or_else(|| Error::InvalidArgument("payload size overflows usize".into()))?;
        if payload.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(Error::TrailingBytes(payload.len() - expected));
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        let tensor = Tensor { dims, data };
        tensor.check_finite()?;
        Ok(tensor)
    }
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::from_bytes(&bytes)
}

pub fn write_tensor(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = tensor.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(dims: &[u64]) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        b.push(DTYPE_F32);
        b.push(dims.len() as u8);
        for d in dims {
            b.extend_from_slice(&d.to_le_bytes());
        }
        b
    }

    #[test]
    fn identity_from_raw_bytes() {
        let mut b = header(&[2, 2]);
        for v in [1.0f32, 0.0, 0.0, 1.0] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        let t = Tensor::from_bytes(&b).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn truncated_payload() {
        let mut b = header(&[2, 2]);
        b.extend_from_slice(&[0u8; 15]);
        assert!(matches!(
            Tensor::from_bytes(&b),
            Err(Error::TruncatedPayload {
                expected: 16,
                found: 15
            })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut b = header(&[1]);
        b.extend_from_slice(&[0u8; 5]);
        assert!(matches!(Tensor::from_bytes(&b), Err(Error::TrailingBytes(1))));
    }

    #[test]
    fn distinct_header_errors() {
        assert!(matches!(
            Tensor::from_bytes(b"OAT2\x01\x00"),
            Err(Error::BadMagic { .. })
        ));
        assert!(matches!(
            Tensor::from_bytes(b"OAT1\x02\x00"),
            Err(Error::UnsupportedDtype(2))
        ));
        assert!(matches!(
            Tensor::from_bytes(b"OAT1\x01\x01\x00"),
            Err(Error::TruncatedPayload { .. })
        ));
        let mut b = header(&[1]);
        b.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            Tensor::from_bytes(&b),
            Err(Error::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn one_by_one_is_26_bytes() {
        let t = Tensor::new(vec![1, 1], vec![0.0]).unwrap();
        assert_eq!(t.to_bytes().unwrap().len(), 26);
    }

    #[test]
    fn write_rejects_non_finite() {
        let t = Tensor::new(vec![2], vec![1.0, f32::INFINITY]).unwrap();
        assert!(matches!(t.to_bytes(), Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn file_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.oat");
        let b = dir.path().join("b.oat");
        let data: Vec<f32> = (0..28).map(|i| (i as f32 * 0.37).sin() * 1e3).collect();
        let t = Tensor::new(vec![4, 7], data).unwrap();
        write_tensor(&t, &a).unwrap();
        let back = load_tensor(&a).unwrap();
        write_tensor(&back, &b).unwrap();
        assert_eq!(back, t);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    proptest! {
        #[test]
        fn bytes_round_trip_bitwise(
            dims in prop::collection::vec(0usize..5, 0..4),
            seed in any::<u64>(),
        ) {
            let count: usize = dims.iter().product();
            let data: Vec<f32> = (0..count)
                .map(|i| f32::from_bits(((seed.wrapping_mul(i as u64 + 1)) as u32) & 0x7f7f_ffff))
                .collect();
            let t = Tensor::new(dims, data).unwrap();
            let back = Tensor::from_bytes(&t.to_bytes().unwrap()).unwrap();
            prop_assert_eq!(
                back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            prop_assert_eq!(back.dims(), t.dims());
        }
    }
}
