//! Binary image codec. Layout: magic `RSI1`, little-endian u32 width, height
//! and channel count, f32 resolution (m/px), then row-major f32 samples,
//! channel-interleaved per pixel. The occupancy sidecar is in-memory only;
//! on read it is reconstructed conservatively from nonzero sample pairs.

use super::{EntityChannel, RasterError, Rsi, CHANNELS};

const MAGIC: &[u8; 4] = b"RSI1";

pub fn write_rsi(rsi: &Rsi) -> Vec<u8> {
    let px = (rsi.width as usize) * (rsi.height as usize);
    let mut out = Vec::with_capacity(4 + 12 + 4 + px * CHANNELS * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rsi.width.to_le_bytes());
    out.extend_from_slice(&rsi.height.to_le_bytes());
    out.extend_from_slice(&(CHANNELS as u32).to_le_bytes());
    out.extend_from_slice(&(rsi.resolution as f32).to_le_bytes());
    for v in &rsi.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_rsi(bytes: &[u8]) -> Result<Rsi, RasterError> {
    if bytes.len() < 20 {
        return Err(RasterError::Format("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(RasterError::Format("bad magic".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let width = u32_at(4);
    let height = u32_at(8);
    let channels = u32_at(12);
    let resolution = f32::from_le_bytes(bytes[16..20].try_into().unwrap()) as f64;
    if channels as usize != CHANNELS {
        return Err(RasterError::Format(format!(
            "expected {CHANNELS} channels, found {channels}"
        )));
    }
    let px = (width as usize) * (height as usize);
    let expected = 20 + px * CHANNELS * 4;
    if bytes.len() != expected {
        return Err(RasterError::Format(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(px * CHANNELS);
    for i in 0..px * CHANNELS {
        let off = 20 + i * 4;
        data.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
    }
    let mut rsi = Rsi {
        width,
        height,
        resolution,
        data,
        occupancy: vec![0; px * EntityChannel::ALL.len()],
    };
    for idx in 0..px {
        for entity in EntityChannel::ALL {
            let base = idx * CHANNELS + 2 * entity.index();
            if rsi.data[base] != 0.0 || rsi.data[base + 1] != 0.0 {
                rsi.occupancy[entity.index() * px + idx] = 1;
            }
        }
    }
    Ok(rsi)
}
