//! `STK1` stacked frames: magic, then height, width and channel count as
//! `u32`, then `C` planes of `H * W` `f32` values, little-endian. Window
//! metadata is not stored.

use std::path::Path;

use super::{write_file, FormatError, Reader};
use crate::repr::{StackedFrame, WindowInfo};

pub const MAGIC: &[u8; 4] = b"STK1";

pub fn encode(frame: &StackedFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * frame.planes.len());
    out.extend_from_slice(MAGIC);
    for d in [frame.height, frame.width, frame.channels] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &frame.planes {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<StackedFrame, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let channels = r.u32()? as usize;
    let n = (height as u128) * (width as u128) * (channels as u128);
    if n * 4 != r.remaining() as u128 {
        return Err(FormatError::invalid(
            4,
            format!("{height}x{width}x{channels} needs {} bytes, {} follow", n * 4, r.remaining()),
        ));
    }
    let mut planes = Vec::with_capacity(n as usize);
    for _ in 0..n {
        planes.push(r.f32()?);
    }
    Ok(StackedFrame {
        width,
        height,
        channels,
        planes,
        window: WindowInfo::default(),
    })
}

pub fn write(path: impl AsRef<Path>, frame: &StackedFrame) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode(frame))
}

pub fn read(path: impl AsRef<Path>) -> Result<StackedFrame, FormatError> {
    decode(&std::fs::read(path)?)
}
