//! Checkpoint format: little-endian, named f32 blobs.
//!
//! ```text
//! magic   [u8; 4]  = "TOFC"
//! version u32      = 1
//! count   u32      number of parameters
//! per parameter, in set order:
//!   name_len u16, name bytes (utf-8)
//!   ndim u8, dims u32 * ndim
//!   data f32 * prod(dims)
//! ```
//!
//! Values are stored as f32; in-memory math stays f64, so save/load rounds
//! once. Rewriting a loaded checkpoint is byte-identical.

use std::io::{Read, Write};

use crate::error::NeuroError;
use crate::optimizer::ParamSet;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"TOFC";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, params: &ParamSet) -> Result<(), NeuroError> {
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params.iter() {
        let name_bytes = name.as_bytes();
        assert!(name_bytes.len() <= u16::MAX as usize);
        w.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
        w.write_all(name_bytes)?;
        let shape = tensor.shape();
        assert!(shape.len() <= u8::MAX as usize);
        w.write_all(&[shape.len() as u8])?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), NeuroError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            NeuroError::CheckpointTruncated
        } else {
            NeuroError::Io(e)
        }
    })
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamSet, NeuroError> {
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(NeuroError::CheckpointBadMagic { found: magic });
    }
    let mut u32buf = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(NeuroError::CheckpointUnsupportedVersion(version));
    }
    read_exact_or_truncated(&mut r, &mut u32buf)?;
    let count = u32::from_le_bytes(u32buf);

    let mut params = ParamSet::new();
    for _ in 0..count {
        let mut u16buf = [0u8; 2];
        read_exact_or_truncated(&mut r, &mut u16buf)?;
        let name_len = u16::from_le_bytes(u16buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact_or_truncated(&mut r, &mut name_bytes)?;
        let name = String::from_utf8(name_bytes).map_err(|_| NeuroError::CheckpointMalformed("parameter name is not utf-8".into()))?;
        if params.get(&name).is_some() {
            return Err(NeuroError::CheckpointMalformed(format!(
                "duplicate parameter {name}"
            )));
        }
        let mut ndim = [0u8; 1];
        read_exact_or_truncated(&mut r, &mut ndim)?;
        let mut shape = Vec::with_capacity(ndim[0] as usize);
        let mut numel = 1usize;
        for _ in 0..ndim[0] {
            read_exact_or_truncated(&mut r, &mut u32buf)?;
            let d = u32::from_le_bytes(u32buf) as usize;
            numel = numel.checked_mul(d).ok_or_else(|| NeuroError::CheckpointMalformed("dimension product overflows".into()))?;
            shape.push(d);
        }
        if numel > (1 << 28) {
            return Err(NeuroError::CheckpointMalformed(format!(
                "parameter {name} claims {numel} elements"
            )));
        }
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            read_exact_or_truncated(&mut r, &mut u32buf)?;
            data.push(f32::from_le_bytes(u32buf) as f64);
        }
        params.insert(&name, Tensor::from_vec(&shape, data));
    }
    Ok(params)
}
