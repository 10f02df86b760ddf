//! Checkpoint layout, all integers little-endian:
//!
//! ```text
//! "DFCK" | version u16 | action_count u16
//! per layer: rows u32 | cols u32 | rows*cols f32 weights (row-major) | rows f32 biases
//! freeze mask: 3 bytes, 0 or 1
//! ```

use super::{Layer, NetError, NetworkParameters, NUM_LAYERS};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DFCK";
pub const CHECKPOINT_VERSION: u16 = 1;

pub fn serialize(params: &NetworkParameters) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + params.param_count() * 4 + 24 + NUM_LAYERS);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.action_count() as u16).to_le_bytes());
    for layer in &params.layers {
        out.extend_from_slice(&(layer.rows as u32).to_le_bytes());
        out.extend_from_slice(&(layer.cols as u32).to_le_bytes());
        for v in layer.weights.iter().chain(&layer.biases) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend(params.freeze_mask.iter().map(|&f| f as u8));
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        if self.bytes.len() < n {
            return Err(NetError::Truncated);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, NetError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, NetError> {
        let raw = self.take(n.checked_mul(4).ok_or(NetError::Truncated)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<NetworkParameters, NetError> {
    let mut r = Reader { bytes };
    if r.take(4).map_err(|_| NetError::BadMagic)? != CHECKPOINT_MAGIC {
        return Err(NetError::BadMagic);
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(NetError::Version(version));
    }
    let action_count = r.u16()? as usize;

    let mut layers = Vec::with_capacity(NUM_LAYERS);
    for l in 0..NUM_LAYERS {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if rows == 0 || cols == 0 {
            return Err(NetError::DimMismatch(format!("layer {l} has a zero dimension")));
        }
        if let Some(prev) = layers.last() {
            let prev: &Layer = prev;
            if prev.rows != cols {
                return Err(NetError::DimMismatch(format!(
                    "layer {l} expects {cols} inputs but layer {} emits {}",
                    l - 1,
                    prev.rows
                )));
            }
        }
        let weights = r.f32s(rows.checked_mul(cols).ok_or(NetError::Truncated)?)?;
        let biases = r.f32s(rows)?;
        layers.push(Layer {
            rows,
            cols,
            weights,
            biases,
        });
    }
    if layers[NUM_LAYERS - 1].rows != action_count {
        return Err(NetError::DimMismatch(format!(
            "header declares {action_count} actions, output layer has {}",
            layers[NUM_LAYERS - 1].rows
        )));
    }
    let mask = r.take(NUM_LAYERS)?;
    let mut freeze_mask = [false; NUM_LAYERS];
    for (dst, &b) in freeze_mask.iter_mut().zip(mask) {
        *dst = match b {
            0 => false,
            1 => true,
            other => return Err(NetError::DimMismatch(format!("freeze flag byte {other}"))),
        };
    }
    if !r.bytes.is_empty() {
        return Err(NetError::DimMismatch(format!(
            "{} trailing bytes after freeze mask",
            r.bytes.len()
        )));
    }
    let layers: [Layer; NUM_LAYERS] = layers.try_into().expect("three layers");
    Ok(NetworkParameters {
        layers,
        freeze_mask,
    })
}
