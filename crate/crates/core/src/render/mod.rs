//! Front-to-back alpha compositing over sparse voxel scenes.
//!
//! Each pixel casts one ray; the voxels it pierces are sorted by entry
//! depth and composited with weights `T_i * alpha_i`, where `T_i` is the
//! transmittance in front of voxel `i`. Besides color and depth the
//! renderer accumulates two confidence measures: the opacity-squared sum
//! and the product of the transmittance-weighted voxel size and opacity.

mod flow;
mod scene;
mod synthetic;

pub use flow::{flow_from_depth, flow_magnitude_max, FlowField};
pub use scene::{Hit, SceneError, SparseVoxelScene, Voxel};
pub use synthetic::{make_test_scene, SceneKind, TestSceneSpec};

use rayon::prelude::*;

use crate::geometry::{CameraModel, Pose, INVALID};
use crate::image::{ConfidenceMap, DepthMap, Image};

/// Rays stop once transmittance falls below this value.
pub const TERMINATION_TRANSMITTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RenderOptions {
    /// Use `1 - norm(sum T s)` for the size factor of the voxel-size
    /// confidence, so smaller voxels score higher.
    pub invert_size_term: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: Image,
    /// Composited entry depth; invalid where no voxel contributed.
    pub depth: DepthMap,
    pub conf_ao: ConfidenceMap,
    pub conf_vsize: ConfidenceMap,
    /// Transmittance left after the last composited voxel.
    pub residual: Image,
    /// Raw `sum T_i alpha_i`.
    pub opacity: Image,
    /// Raw `sum T_i s_i` before normalization.
    pub size_sum: Image,
}

#[derive(Debug, Clone, Copy, Default)]
struct PixelAccum {
    color: [f64; 3],
    depth: f64,
    opacity: f64,
    ao: f64,
    size: f64,
    residual: f64,
}

fn composite(scene: &SparseVoxelScene, hits: &[Hit]) -> PixelAccum {
    let mut acc = PixelAccum::default();
    let mut trans = 1.0;
    for hit in hits {
        let v = &scene.voxels()[hit.index as usize];
        let alpha = v.alpha as f64;
        let w = trans * alpha;
        for k in 0..3 {
            acc.color[k] += w * v.color[k] as f64;
        }
        acc.depth += w * hit.enter;
        acc.opacity += w;
        acc.ao += w * alpha;
        acc.size += trans * v.size as f64;
        trans *= 1.0 - alpha;
        if trans < TERMINATION_TRANSMITTANCE {
            break;
        }
    }
    acc.residual = trans;
    acc
}

/// Min-max normalization over the pixels flagged valid; invalid pixels and
/// constant images map to 0.
pub fn normalize_valid(values: &[f64], valid: &[bool]) -> Vec<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (v, ok) in values.iter().zip(valid) {
        if *ok {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let range = hi - lo;
    values
        .iter()
        .zip(valid)
        .map(|(v, ok)| if *ok && range > 0.0 { (v - lo) / range } else { 0.0 })
        .collect()
}

/// Renders `scene` from a camera-to-world `pose`.
pub fn render(scene: &SparseVoxelScene, pose: &Pose, cam: &CameraModel, options: &RenderOptions) -> RenderOutput {
    let (w, h) = (cam.width, cam.height);
    let origin = *pose.translation();
    let rot = *pose.rotation();
    let mut pixels = vec![PixelAccum::default(); w * h];
    pixels.par_chunks_mut(w.max(1)).enumerate().for_each_init(
        || (Vec::new(), Vec::new()),
        |(scratch, hits), (y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                // Camera-frame ray has unit z, so the ray parameter is the
                // depth along the optical axis.
                let dir = rot * cam.ray(x as f64, y as f64);
                scene.intersect(&origin, &dir, scratch, hits);
                *px = composite(scene, hits);
            }
        },
    );

    let valid: Vec<bool> = pixels.iter().map(|p| p.opacity > 0.0).collect();
    let ao_raw: Vec<f64> = pixels.iter().map(|p| p.ao).collect();
    let size_raw: Vec<f64> = pixels.iter().map(|p| p.size).collect();
    let opacity_raw: Vec<f64> = pixels.iter().map(|p| p.opacity).collect();
    let ao = normalize_valid(&ao_raw, &valid);
    let mut size_term = normalize_valid(&size_raw, &valid);
    if options.invert_size_term {
        for (s, ok) in size_term.iter_mut().zip(&valid) {
            if *ok {
                *s = 1.0 - *s;
            }
        }
    }
    let opacity_term = normalize_valid(&opacity_raw, &valid);
    let vsize = size_term.iter().zip(&opacity_term).map(|(a, b)| a * b).collect();

    let color = pixels.iter().flat_map(|p| p.color).collect();
    let depth = pixels
        .iter()
        .zip(&valid)
        .map(|(p, ok)| if *ok { p.depth } else { INVALID })
        .collect();
    RenderOutput {
        color: Image::from_vec(w, h, 3, color),
        depth: DepthMap::from_vec(w, h, depth),
        conf_ao: ConfidenceMap::from_vec(w, h, ao),
        conf_vsize: ConfidenceMap::from_vec(w, h, vsize),
        residual: Image::from_vec(w, h, 1, pixels.iter().map(|p| p.residual).collect()),
        opacity: Image::from_vec(w, h, 1, opacity_raw),
        size_sum: Image::from_vec(w, h, 1, size_raw),
    }
}
