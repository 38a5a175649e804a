//! `SVXL` voxel scenes: magic, `u64` count, then per voxel eight `f32`
//! (center xyz, size, opacity, rgb), little-endian.

use std::path::Path;

use super::{write_file, FormatError, Reader};
use crate::render::{SparseVoxelScene, Voxel};

pub const MAGIC: &[u8; 4] = b"SVXL";
const RECORD_LEN: usize = 32;

pub fn encode(scene: &SparseVoxelScene) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + RECORD_LEN * scene.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(scene.len() as u64).to_le_bytes());
    for v in scene.voxels() {
        let fields = [
            v.center[0], v.center[1], v.center[2], v.size, v.alpha, v.color[0], v.color[1], v.color[2],
        ];
        for f in fields {
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SparseVoxelScene, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let count = r.u64()?;
    if (count as u128) * RECORD_LEN as u128 != r.remaining() as u128 {
        return Err(FormatError::invalid(
            4,
            format!("header declares {count} voxels but {} bytes follow", r.remaining()),
        ));
    }
    let mut voxels = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let at = r.offset();
        let mut f = [0f32; 8];
        for v in f.iter_mut() {
            *v = r.f32()?;
        }
        let voxel = Voxel::new([f[0], f[1], f[2]], f[3], f[4], [f[5], f[6], f[7]]);
        voxel.validate().map_err(|m| FormatError::invalid(at, m))?;
        voxels.push(voxel);
    }
    r.finish()?;
    SparseVoxelScene::new(voxels).map_err(|e| FormatError::invalid(12, e.to_string()))
}

pub fn write(path: impl AsRef<Path>, scene: &SparseVoxelScene) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode(scene))
}

pub fn read(path: impl AsRef<Path>) -> Result<SparseVoxelScene, FormatError> {
    decode(&std::fs::read(path)?)
}
