//! NDT binary tensor container.
//!
//! Layout: magic `NDT1`, one dtype byte (1 = f64 LE, 3 = u32 LE), one ndim byte, two zero
//! padding bytes, `ndim` little-endian u64 dims, then the row-major payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Tensor;

pub const MAGIC: &[u8; 4] = b"NDT1";
pub const DTYPE_F64: u8 = 1;
pub const DTYPE_U32: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum NdtArray {
    F64(Tensor),
    U32 { dims: Vec<usize>, data: Vec<u32> },
}

fn header(dtype: u8, dims: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * dims.len());
    out.extend_from_slice(MAGIC);
    out.push(dtype);
    out.push(dims.len() as u8);
    out.extend_from_slice(&[0, 0]);
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out
}

pub fn encode_f64(t: &Tensor) -> Vec<u8> {
    let mut out = header(DTYPE_F64, t.dims());
    out.reserve(8 * t.len());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_u32(dims: &[usize], data: &[u32]) -> Vec<u8> {
    let mut out = header(DTYPE_U32, dims);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a container; error messages describe the defect without a path.
pub fn decode(bytes: &[u8]) -> std::result::Result<NdtArray, String> {
    if bytes.len() < 8 {
        return Err("truncated NDT header".into());
    }
    if &bytes[..4] != MAGIC {
        return Err(format!("bad NDT magic {:?}", &bytes[..4]));
    }
    let dtype = bytes[4];
    let ndim = bytes[5] as usize;
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err("nonzero NDT padding bytes".into());
    }
    let dims_end = 8 + 8 * ndim;
    if bytes.len() < dims_end {
        return Err("truncated NDT dims".into());
    }
    let dims: Vec<usize> = bytes[8..dims_end]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    if dims.contains(&0) {
        return Err(format!("NDT dims must be positive, got {dims:?}"));
    }
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or("NDT dims overflow")?;
    let payload = &bytes[dims_end..];
    let width = match dtype {
        DTYPE_F64 => 8,
        DTYPE_U32 => 4,
        other => return Err(format!("unsupported NDT dtype code {other}")),
    };
    if payload.len() != n * width {
        return Err(format!(
            "NDT payload is {} bytes, dims {dims:?} need {}",
            payload.len(),
            n * width
        ));
    }
    match dtype {
        DTYPE_F64 => {
            let data: Vec<f64> = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Tensor::new(dims, data)
                .map(NdtArray::F64)
                .map_err(|e| e.to_string())
        }
        _ => {
            let data = payload
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(NdtArray::U32 { dims, data })
        }
    }
}

fn read(path: &Path) -> Result<NdtArray> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::format(path, msg))
}

pub fn read_f64(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    match read(path)? {
        NdtArray::F64(t) => Ok(t),
        NdtArray::U32 { .. } => Err(Error::format(path, "expected float64 NDT, found uint32")),
    }
}

pub fn read_u32(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<u32>)> {
    let path = path.as_ref();
    match read(path)? {
        NdtArray::U32 { dims, data } => Ok((dims, data)),
        NdtArray::F64(_) => Err(Error::format(path, "expected uint32 NDT, found float64")),
    }
}

pub fn write_f64(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_f64(t)).map_err(|e| Error::io(path, e))
}

pub fn write_u32(path: impl AsRef<Path>, dims: &[usize], data: &[u32]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_u32(dims, data)).map_err(|e| Error::io(path, e))
}
