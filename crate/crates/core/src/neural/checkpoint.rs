//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MLPW"
//! 4       4     format version (u32) = 1
//! 8       4     layer count L (u32)
//! then L times:
//!         4     inputs (u32)
//!         4     outputs (u32)
//!         1     activation tag: 0 identity, 1 relu, 2 tanh
//!         8*o*i weights (f64), row-major outputs x inputs
//!         8*o   biases (f64)
//! ```

use std::io::{Read, Write};

use super::{Activation, Dense, MlpParams, NeuralError};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"MLPW";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(net: &MlpParams, mut out: W) -> Result<(), NeuralError> {
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    for layer in &net.layers {
        out.write_all(&(layer.inputs as u32).to_le_bytes())?;
        out.write_all(&(layer.outputs as u32).to_le_bytes())?;
        out.write_all(&[layer.activation.tag()])?;
        for v in layer.weights.iter().chain(&layer.bias) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, NeuralError> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(input: &mut R, count: usize) -> Result<Vec<f64>, NeuralError> {
    let mut buf = [0u8; 8];
    (0..count)
        .map(|_| {
            input.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        })
        .collect()
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<MlpParams, NeuralError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(NeuralError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(NeuralError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let count = read_u32(&mut input)? as usize;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let inputs = read_u32(&mut input)? as usize;
        let outputs = read_u32(&mut input)? as usize;
        let mut tag = [0u8; 1];
        input.read_exact(&mut tag)?;
        let activation = Activation::from_tag(tag[0])
            .ok_or_else(|| NeuralError::Checkpoint(format!("unknown activation tag {}", tag[0])))?;
        let weights = read_f64s(&mut input, inputs * outputs)?;
        let bias = read_f64s(&mut input, outputs)?;
        layers.push(Dense {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        });
    }
    MlpParams::from_layers(layers)
}
