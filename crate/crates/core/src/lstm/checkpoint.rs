//! Binary checkpoint: four little-endian `u32` header words
//! (`0x4C53544D`, version, hidden size, input size) followed by every
//! parameter as a little-endian `f64`, in [`ModelParams`] layout order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::params::ModelParams;

pub const MAGIC: u32 = 0x4C53_544D;
pub const VERSION: u32 = 1;

pub fn write_checkpoint<T: Scalar, W: Write>(params: &ModelParams<T>, mut out: W) -> Result<()> {
    for word in [MAGIC, VERSION, params.hidden_size() as u32, params.input_size() as u32] {
        out.write_all(&word.to_le_bytes())?;
    }
    for v in params.as_slice() {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut input: R) -> Result<ModelParams<T>> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(|_| Error::Format("truncated checkpoint header".into()))?;
    let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {:#x}", word(0))));
    }
    if word(1) != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {}", word(1))));
    }
    let (hidden, in_size) = (word(2) as usize, word(3) as usize);
    let count = ModelParams::<T>::parameter_count(hidden, in_size);
    let mut body = vec![0u8; count * 8];
    input.read_exact(&mut body).map_err(|_| Error::Format("truncated checkpoint body".into()))?;
    let data = body.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap()))).collect();
    ModelParams::from_flat(hidden, in_size, data)
}

/// Size of one model upload when parameters travel at single precision.
pub fn transmitted_bits(hidden: usize, input: usize) -> f64 {
    (ModelParams::<f64>::parameter_count(hidden, input) * 32) as f64
}
