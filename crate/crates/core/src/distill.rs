//! Transfer of disparity labels from an RGB stereo rig to an event stereo
//! rig through depth, a rigid extrinsic and re-projection with a z-buffer.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{backproject, project, CameraModel, GeometryError, Pose, StereoRig, DIV_EPS, INVALID};
use crate::image::DisparityMap;

/// Depth range kept before re-projection, meters.
pub const DEFAULT_CLIP: (f64, f64) = (0.5, 100.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistillError {
    #[error("disparity map is {got:?} but the source camera is {expected:?}")]
    SizeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("depth clip [{0}, {1}] is invalid")]
    InvalidClip(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Source (RGB) and target (event) rigs with the source-to-target
/// transform between their left cameras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigPair {
    pub rgb: StereoRig,
    pub event: StereoRig,
    /// Maps source camera coordinates to target camera coordinates.
    pub extrinsic: Pose,
}

impl RigPair {
    pub fn new(rgb: StereoRig, event: StereoRig, extrinsic: Pose) -> Result<Self, DistillError> {
        rgb.camera.validate()?;
        event.camera.validate()?;
        for b in [rgb.baseline, event.baseline] {
            if !(b > 0.0 && b.is_finite()) {
                return Err(GeometryError::InvalidBaseline(b).into());
            }
        }
        Ok(Self { rgb, event, extrinsic })
    }

    /// The pair for the opposite direction.
    pub fn inverse(&self) -> Self {
        Self {
            rgb: self.event,
            event: self.rgb,
            extrinsic: self.extrinsic.inverse(),
        }
    }
}

/// Candidate depths that landed on each target pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatAudit {
    pub width: usize,
    pub height: usize,
    pub candidates: Vec<Vec<f64>>,
}

impl SplatAudit {
    /// Pixels that received more than one candidate.
    pub fn contested(&self) -> impl Iterator<Item = (usize, usize, &[f64])> {
        self.candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() > 1)
            .map(move |(i, c)| (i % self.width, i / self.width, c.as_slice()))
    }
}

/// Target pixel and depth for one source pixel, if it survives the clip
/// and lands inside the target image.
fn transfer_pixel(x: usize, y: usize, d: f64, rigs: &RigPair, clip: (f64, f64)) -> Option<(usize, f64)> {
    if !(d.is_finite() && d > DIV_EPS) {
        return None;
    }
    let z = rigs.rgb.bf() / d;
    if !(z >= clip.0 && z <= clip.1) {
        return None;
    }
    let p = backproject(x as f64, y as f64, z, &rigs.rgb.camera).ok()?;
    let q = project(&rigs.extrinsic.transform(&p), &rigs.event.camera).ok()?;
    let cam: &CameraModel = &rigs.event.camera;
    let (u, v) = ((q.u + 0.5).floor(), (q.v + 0.5).floor());
    if u < 0.0 || v < 0.0 || u >= cam.width as f64 || v >= cam.height as f64 {
        return None;
    }
    Some((v as usize * cam.width + u as usize, q.depth))
}

fn check_inputs(d: &DisparityMap, rigs: &RigPair, clip: (f64, f64)) -> Result<(), DistillError> {
    let cam = &rigs.rgb.camera;
    if (d.width(), d.height()) != (cam.width, cam.height) {
        return Err(DistillError::SizeMismatch {
            expected: (cam.width, cam.height),
            got: (d.width(), d.height()),
        });
    }
    if !(clip.0 > 0.0 && clip.0 <= clip.1) {
        return Err(DistillError::InvalidClip(clip.0, clip.1));
    }
    Ok(())
}

fn zbuffer_to_disparity(zbuf: &[f64], rigs: &RigPair) -> DisparityMap {
    let bf = rigs.event.bf();
    let cam = &rigs.event.camera;
    let data = zbuf.iter().map(|&z| if z.is_finite() { bf / z } else { INVALID }).collect();
    DisparityMap::from_vec(cam.width, cam.height, data)
}

/// Re-projects source disparity into the target camera. Each source pixel
/// splats to its nearest target pixel; the nearest depth wins; unhit
/// target pixels are invalid.
pub fn reproject_labels(d: &DisparityMap, rigs: &RigPair, clip: (f64, f64)) -> Result<DisparityMap, DistillError> {
    check_inputs(d, rigs, clip)?;
    let n = rigs.event.camera.width * rigs.event.camera.height;
    let w = d.width();
    let fresh = || vec![f64::INFINITY; n];
    let zbuf = (0..d.height())
        .into_par_iter()
        .fold(fresh, |mut buf, y| {
            for x in 0..w {
                if let Some((i, z)) = transfer_pixel(x, y, d.at(x, y), rigs, clip) {
                    if z < buf[i] {
                        buf[i] = z;
                    }
                }
            }
            buf
        })
        .reduce(fresh, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.min(y);
            }
            a
        });
    Ok(zbuffer_to_disparity(&zbuf, rigs))
}

/// [`reproject_labels`] that also records every candidate depth per target
/// pixel.
pub fn reproject_labels_audit(
    d: &DisparityMap,
    rigs: &RigPair,
    clip: (f64, f64),
) -> Result<(DisparityMap, SplatAudit), DistillError> {
    check_inputs(d, rigs, clip)?;
    let cam = &rigs.event.camera;
    let mut candidates = vec![Vec::new(); cam.width * cam.height];
    for y in 0..d.height() {
        for x in 0..d.width() {
            if let Some((i, z)) = transfer_pixel(x, y, d.at(x, y), rigs, clip) {
                candidates[i].push(z);
            }
        }
    }
    let zbuf: Vec<f64> = candidates
        .iter()
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    Ok((
        zbuffer_to_disparity(&zbuf, rigs),
        SplatAudit {
            width: cam.width,
            height: cam.height,
            candidates,
        },
    ))
}

/// Pass-through for sensors that already share the label's pixel grid.
pub fn identity_transfer(d: &DisparityMap) -> DisparityMap {
    d.clone()
}
