//! Pinhole and epipolar geometry: rigid poses, projection, disparity/depth
//! conversion and rotation re-orthogonalization.
//!
//! Pixel convention: `(0, 0)` is the center of the top-left pixel, so an
//! image of width `W` spans `[-0.5, W - 0.5]` horizontally.
//!
//! Camera poses returned by trajectories are camera-to-world transforms whose
//! rotation columns are the camera axes (x right, y down, z forward)
//! expressed in world coordinates.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::image::{DepthMap, DisparityMap};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Sentinel for invalid depth/disparity samples (quiet NaN).
pub const INVALID: f64 = f64::NAN;

/// Disparities (and depths) at or below this value are treated as invalid
/// before inversion.
pub const DIV_EPS: f64 = 1e-9;

/// Tolerance for the orthonormality and determinant checks on [`Pose`].
pub const ROTATION_TOL: f64 = 1e-9;

#[inline]
pub fn is_valid(v: f64) -> bool {
    v.is_finite()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (|R^T R - I|_F = {0:e})")]
    NotOrthonormal(f64),
    #[error("rotation determinant {0} is not +1")]
    BadDeterminant(f64),
    #[error("matrix is rank deficient and has no nearest rotation")]
    Degenerate,
    #[error("polar iteration did not converge")]
    NoConvergence,
    #[error("invalid camera intrinsics: {0}")]
    InvalidCamera(String),
    #[error("baseline must be positive, got {0}")]
    InvalidBaseline(f64),
    #[error("pixel ({u}, {v}) lies outside the {width}x{height} image")]
    OutOfBounds {
        u: f64,
        v: f64,
        width: usize,
        height: usize,
    },
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
}

/// Rigid transform `p -> R p + t` with `R` in SO(3) and `t` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Mat3,
    translation: Vec3,
}

impl Pose {
    /// Builds a pose, checking the SO(3) invariants within [`ROTATION_TOL`].
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        check_rotation(&rotation)?;
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Builds a pose from an approximately orthonormal matrix by projecting it
    /// onto SO(3) first.
    pub fn from_near_rotation(m: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        Ok(Self {
            rotation: reorthogonalize(&m)?,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about the unit `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Self {
        let rotation = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            angle,
        );
        Self {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    #[inline]
    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn with_translation(&self, translation: Vec3) -> Self {
        Self {
            rotation: self.rotation,
            translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    #[inline]
    pub fn transform(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Row-major `[R | t]`, 12 values.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x, //
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y, //
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
        ]
    }

    /// Inverse of [`Pose::to_row_major`]; the rotation block is
    /// re-orthogonalized so that text round-off is tolerated.
    pub fn from_row_major(v: &[f64; 12]) -> Result<Self, GeometryError> {
        let m = Mat3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        Self::from_near_rotation(m, Vec3::new(v[3], v[7], v[11]))
    }
}

/// Rigid motion `R p + t`.
#[inline]
pub fn transform(pose: &Pose, p: &Vec3) -> Vec3 {
    pose.transform(p)
}

fn check_rotation(r: &Mat3) -> Result<(), GeometryError> {
    let err = (r.transpose() * r - Mat3::identity()).norm();
    if !(err <= ROTATION_TOL) {
        return Err(GeometryError::NotOrthonormal(err));
    }
    let det = r.determinant();
    if !((det - 1.0).abs() <= ROTATION_TOL) {
        return Err(GeometryError::BadDeterminant(det));
    }
    Ok(())
}

/// Nearest rotation in the Frobenius sense (orthogonal polar factor).
///
/// Uses the scaled Newton iteration `X <- (g X + X^-T / g) / 2`, which
/// converges quadratically to the polar factor for any non-singular input.
/// Inputs with a non-positive determinant have no nearby rotation and are
/// rejected.
pub fn reorthogonalize(m: &Mat3) -> Result<Mat3, GeometryError> {
    let norm = m.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(GeometryError::Degenerate);
    }
    let det = m.determinant();
    // |det| / |m|^3 is scale free; rank < 3 drives it to zero.
    if !(det / norm.powi(3) > 1e-12) {
        return Err(GeometryError::Degenerate);
    }

    let mut x = *m;
    for _ in 0..100 {
        let inv_t = x
            .try_inverse()
            .ok_or(GeometryError::Degenerate)?
            .transpose();
        // Frobenius scaling accelerates the early iterations.
        let g = (inv_t.norm() / x.norm()).sqrt();
        let next = (x * g + inv_t / g) * 0.5;
        let delta = (next - x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    // One unscaled polish step; fixes any residual scale drift.
    let inv_t = x.try_inverse().ok_or(GeometryError::Degenerate)?.transpose();
    x = (x + inv_t) * 0.5;

    check_rotation(&x).map_err(|_| GeometryError::NoConvergence)?;
    Ok(x)
}

/// Pinhole intrinsics and image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Principal point at the image center, square pixels.
    pub fn centered(focal: f64, width: usize, height: usize) -> Result<Self, GeometryError> {
        Self::new(
            focal,
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return Err(GeometryError::InvalidCamera(format!(
                "cx={} outside (0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::InvalidCamera(format!(
                "cy={} outside (0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= -0.5 && u <= self.width as f64 - 0.5 && v >= -0.5 && v <= self.height as f64 - 0.5
    }

    /// Un-normalized camera-frame ray through `(u, v)` with unit z.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Rectified stereo pair sharing one camera model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub camera: CameraModel,
    pub baseline: f64,
}

impl StereoRig {
    pub fn new(camera: CameraModel, baseline: f64) -> Result<Self, GeometryError> {
        camera.validate()?;
        if !(baseline > 0.0 && baseline.is_finite()) {
            return Err(GeometryError::InvalidBaseline(baseline));
        }
        Ok(Self { camera, baseline })
    }

    /// `b * fx`, the disparity-depth product.
    #[inline]
    pub fn bf(&self) -> f64 {
        self.baseline * self.camera.fx
    }
}

/// Image-plane projection of a camera-frame point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Projects a camera-frame point: `(fx x/z + cx, fy y/z + cy, z)`.
pub fn project(p: &Vec3, cam: &CameraModel) -> Result<Projection, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::BehindCamera(p.z));
    }
    Ok(Projection {
        u: cam.fx * p.x / p.z + cam.cx,
        v: cam.fy * p.y / p.z + cam.cy,
        depth: p.z,
    })
}

/// Lifts pixel `(u, v)` at depth `z` to a camera-frame point, `z K^-1 [u v 1]`.
pub fn backproject(u: f64, v: f64, z: f64, cam: &CameraModel) -> Result<Vec3, GeometryError> {
    if !cam.in_bounds(u, v) {
        return Err(GeometryError::OutOfBounds {
            u,
            v,
            width: cam.width,
            height: cam.height,
        });
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(GeometryError::InvalidDepth(z));
    }
    Ok(cam.ray(u, v) * z)
}

#[inline]
fn invert_product(value: f64, product: f64) -> f64 {
    if value.is_finite() && value > DIV_EPS {
        product / value
    } else {
        INVALID
    }
}

/// `Z = b fx / D`; disparities at or below [`DIV_EPS`] become invalid.
pub fn disparity_to_depth(d: &DisparityMap, rig: &StereoRig) -> DepthMap {
    let bf = rig.bf();
    let data = d.data().iter().map(|&v| invert_product(v, bf)).collect();
    DepthMap::from_vec(d.width(), d.height(), data)
}

/// `D = b fx / Z` with the same sentinel rule as [`disparity_to_depth`].
pub fn depth_to_disparity(z: &DepthMap, rig: &StereoRig) -> DisparityMap {
    let bf = rig.bf();
    let data = z.data().iter().map(|&v| invert_product(v, bf)).collect();
    DisparityMap::from_vec(z.width(), z.height(), data)
}
