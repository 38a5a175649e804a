//! Continuous virtual camera trajectories `tau in [0, 1] -> Pose`.
//!
//! Two kinds exist: a local sweep that translates a fixed base pose along an
//! axis, and a global path fitted with cubic B-splines to a set of captured
//! poses. All sampled poses are camera-to-world.

mod alpha_shape;
mod spline;

pub use alpha_shape::{alpha_shape_path, default_alpha, AlphaPath};
pub use spline::CubicBSpline;

use thiserror::Error;

use crate::geometry::{reorthogonalize, GeometryError, Mat3, Pose, Vec3};
use crate::io::config::{ConfigError, Section};

/// Gravity direction used by the motion-aligned orientation.
pub const GRAVITY: Vec3 = Vec3::new(0.0, 0.0, 1.0);

/// Step in `tau` for central-difference velocity estimates.
pub const VELOCITY_STEP: f64 = 1e-3;

/// Minimum number of poses after striding for a global fit.
pub const MIN_GLOBAL_POSES: usize = 8;

/// Default z-clamp percentile range for motion-aligned paths.
pub const DEFAULT_Z_PERCENTILES: (f64, f64) = (45.0, 55.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("sweep axis must be non-zero")]
    ZeroAxis,
    #[error("tau = {0} is outside [0, 1]")]
    TauOutOfRange(f64),
    #[error("need at least {need} poses, got {got}")]
    TooFewPoses { got: usize, need: usize },
    #[error("subset stride must be at least 1")]
    ZeroStride,
    #[error("degenerate fit: all poses coincide")]
    DegenerateFit,
    #[error("rotation splines collapse at tau = {0}")]
    DegenerateRotation(f64),
    #[error("motion direction is parallel to gravity at tau = {0}")]
    VelocityParallelToGravity(f64),
    #[error("no motion at tau = {0}; cannot align orientation")]
    ZeroVelocity(f64),
    #[error("degenerate point set: {0}")]
    DegeneratePoints(String),
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("malformed trajectory: {0}")]
    Malformed(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// How the global trajectory derives its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Rotation reconstructed from the fitted right/look splines.
    FromSplines,
    /// Optical axis follows the direction of motion; x is horizontal with
    /// respect to [`GRAVITY`].
    MotionAligned,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::FromSplines => "from-splines",
            Orientation::MotionAligned => "motion-aligned",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "from-splines" => Some(Orientation::FromSplines),
            "motion-aligned" => Some(Orientation::MotionAligned),
            _ => None,
        }
    }
}

/// Options for [`fit_global_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalFitOptions {
    /// Keep every `subset_stride`-th pose.
    pub subset_stride: usize,
    pub orientation: Orientation,
    /// Clamp the z translation to this percentile range of the input poses.
    pub z_percentiles: Option<(f64, f64)>,
}

impl GlobalFitOptions {
    /// Motion-aligned paths clamp z to the 45th-55th percentile range;
    /// spline-oriented fits are left unclamped.
    pub fn new(subset_stride: usize, orientation: Orientation) -> Self {
        let z_percentiles = match orientation {
            Orientation::MotionAligned => Some(DEFAULT_Z_PERCENTILES),
            Orientation::FromSplines => None,
        };
        Self {
            subset_stride,
            orientation,
            z_percentiles,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalTrajectory {
    pub base: Pose,
    pub axis: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTrajectory {
    pub translation: CubicBSpline,
    /// Fits the first rotation column (camera x axis).
    pub right: CubicBSpline,
    /// Fits the third rotation column (optical axis).
    pub look: CubicBSpline,
    pub orientation: Orientation,
    pub z_range: Option<(f64, f64)>,
    /// Max distance between fitted and input translations, meters.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Local(LocalTrajectory),
    Global(GlobalTrajectory),
}

/// `tau -> [R | t + tau r]`.
pub fn local_trajectory(base: Pose, axis: Vec3) -> Result<Trajectory, TrajectoryError> {
    if !(axis.norm() > 0.0) || !axis.iter().all(|v| v.is_finite()) {
        return Err(TrajectoryError::ZeroAxis);
    }
    Ok(Trajectory::Local(LocalTrajectory { base, axis }))
}

fn knot_count(poses: usize) -> usize {
    4.max(poses.div_ceil(4))
}

/// Linear-interpolated percentile (`p` in `[0, 100]`) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = p.clamp(0.0, 100.0) * (v.len() - 1) as f64 / 100.0;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Least-squares cubic B-spline fit through a pose subset.
///
/// One spline models the translation; two more model the first and third
/// rotation columns, from which the rotation is rebuilt at sample time.
pub fn fit_global_trajectory(
    poses: &[Pose],
    options: GlobalFitOptions,
) -> Result<Trajectory, TrajectoryError> {
    if options.subset_stride == 0 {
        return Err(TrajectoryError::ZeroStride);
    }
    let subset: Vec<Pose> = poses.iter().step_by(options.subset_stride).copied().collect();
    if subset.len() < MIN_GLOBAL_POSES {
        return Err(TrajectoryError::TooFewPoses {
            got: subset.len(),
            need: MIN_GLOBAL_POSES,
        });
    }
    let first = subset[0];
    let coincident = subset.iter().all(|p| {
        (p.translation() - first.translation()).norm() < 1e-12
            && (p.rotation() - first.rotation()).norm() < 1e-12
    });
    if coincident {
        return Err(TrajectoryError::DegenerateFit);
    }

    let z_range = options.z_percentiles.map(|(lo, hi)| {
        let zs: Vec<f64> = subset.iter().map(|p| p.translation().z).collect();
        (percentile(&zs, lo), percentile(&zs, hi))
    });

    let n = subset.len();
    let params: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let translations: Vec<[f64; 3]> = subset
        .iter()
        .map(|p| {
            let mut t = *p.translation();
            if let Some((lo, hi)) = z_range {
                t.z = t.z.clamp(lo, hi);
            }
            [t.x, t.y, t.z]
        })
        .collect();
    let rights: Vec<[f64; 3]> = subset
        .iter()
        .map(|p| p.rotation().column(0).into())
        .collect();
    let looks: Vec<[f64; 3]> = subset
        .iter()
        .map(|p| p.rotation().column(2).into())
        .collect();

    let knots = CubicBSpline::uniform_knots(knot_count(n));
    let translation = CubicBSpline::fit(knots.clone(), &params, &translations)?;
    let right = CubicBSpline::fit(knots.clone(), &params, &rights)?;
    let look = CubicBSpline::fit(knots, &params, &looks)?;

    let residual = params
        .iter()
        .zip(&translations)
        .map(|(&t, want)| {
            let got = translation.eval(t);
            Vec3::from(got).metric_distance(&Vec3::from(*want))
        })
        .fold(0.0, f64::max);

    Ok(Trajectory::Global(GlobalTrajectory {
        translation,
        right,
        look,
        orientation: options.orientation,
        z_range,
        residual,
    }))
}

/// Rotation `[d x l, d, l]` with `d = l x r`, re-orthogonalized.
pub fn rotation_from_right_look(right: &Vec3, look: &Vec3) -> Option<Mat3> {
    let l = look.try_normalize(1e-12)?;
    let d = l.cross(right).try_normalize(1e-9)?;
    let x = d.cross(&l);
    reorthogonalize(&Mat3::from_columns(&[x, d, l])).ok()
}

/// Rotation `[g x v, v x (g x v), v]` for motion direction `v`.
pub fn motion_aligned_rotation(velocity: &Vec3, tau: f64) -> Result<Mat3, TrajectoryError> {
    let v = velocity
        .try_normalize(1e-12)
        .ok_or(TrajectoryError::ZeroVelocity(tau))?;
    let r = GRAVITY.cross(&v);
    let r = r
        .try_normalize(1e-6)
        .ok_or(TrajectoryError::VelocityParallelToGravity(tau))?;
    let d = v.cross(&r);
    Ok(reorthogonalize(&Mat3::from_columns(&[r, d, v]))?)
}

impl GlobalTrajectory {
    fn position(&self, tau: f64) -> Vec3 {
        let mut t = Vec3::from(self.translation.eval(tau));
        if let Some((lo, hi)) = self.z_range {
            t.z = t.z.clamp(lo, hi);
        }
        t
    }

    /// Central-difference velocity of the translation, one-sided at the ends.
    pub fn velocity(&self, tau: f64) -> Vec3 {
        let a = (tau - VELOCITY_STEP).max(0.0);
        let b = (tau + VELOCITY_STEP).min(1.0);
        (self.position(b) - self.position(a)) / (b - a)
    }

    fn sample(&self, tau: f64) -> Result<Pose, TrajectoryError> {
        let rotation = match self.orientation {
            Orientation::FromSplines => {
                let r = Vec3::from(self.right.eval(tau));
                let l = Vec3::from(self.look.eval(tau));
                rotation_from_right_look(&r, &l)
                    .ok_or(TrajectoryError::DegenerateRotation(tau))?
            }
            Orientation::MotionAligned => motion_aligned_rotation(&self.velocity(tau), tau)?,
        };
        Ok(Pose::new(rotation, self.position(tau))?)
    }
}

impl Trajectory {
    /// Pose at virtual time `tau`.
    pub fn sample(&self, tau: f64) -> Result<Pose, TrajectoryError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(TrajectoryError::TauOutOfRange(tau));
        }
        match self {
            Trajectory::Local(l) => Ok(l.base.with_translation(l.base.translation() + l.axis * tau)),
            Trajectory::Global(g) => g.sample(tau),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Trajectory::Local(_) => "local",
            Trajectory::Global(_) => "global",
        }
    }

    /// Serializes into a `[trajectory]` config section.
    pub fn to_section(&self) -> Section {
        let mut s = Section::new("trajectory");
        s.push("kind", self.kind());
        match self {
            Trajectory::Local(l) => {
                s.push("base", join(&l.base.to_row_major()));
                s.push("axis", join(l.axis.as_slice()));
            }
            Trajectory::Global(g) => {
                s.push("orientation", g.orientation.as_str());
                match g.z_range {
                    Some((lo, hi)) => s.push("z_range", join(&[lo, hi])),
                    None => s.push("z_range", "none"),
                }
                s.push("residual", format!("{:e}", g.residual));
                s.push("knots", join(g.translation.knots()));
                for (name, spline) in [
                    ("translation", &g.translation),
                    ("right", &g.right),
                    ("look", &g.look),
                ] {
                    let flat: Vec<f64> = spline.coeffs().iter().flatten().copied().collect();
                    s.push(name, join(&flat));
                }
            }
        }
        s
    }

    /// Inverse of [`Trajectory::to_section`].
    pub fn from_section(s: &Section) -> Result<Self, TrajectoryError> {
        match s.require("kind")?.value.as_str() {
            "local" => {
                let base: [f64; 12] = s.floats_exact("base")?;
                let axis: [f64; 3] = s.floats_exact("axis")?;
                local_trajectory(Pose::from_row_major(&base)?, Vec3::from(axis))
            }
            "global" => {
                let entry = s.require("orientation")?;
                let orientation = Orientation::parse(&entry.value).ok_or_else(|| {
                    ConfigError::at(entry.line, format!("unknown orientation '{}'", entry.value))
                })?;
                let z_range = match s.require("z_range")?.value.as_str() {
                    "none" => None,
                    _ => {
                        let [lo, hi]: [f64; 2] = s.floats_exact("z_range")?;
                        Some((lo, hi))
                    }
                };
                let residual = s.float("residual")?;
                let knots = s.floats("knots")?;
                let spline = |key: &str| -> Result<CubicBSpline, TrajectoryError> {
                    let flat = s.floats(key)?;
                    if flat.len() % 3 != 0 {
                        return Err(TrajectoryError::Malformed(format!(
                            "{key}: coefficient count {} is not a multiple of 3",
                            flat.len()
                        )));
                    }
                    let coeffs = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
                    CubicBSpline::from_parts(knots.clone(), coeffs)
                };
                Ok(Trajectory::Global(GlobalTrajectory {
                    translation: spline("translation")?,
                    right: spline("right")?,
                    look: spline("look")?,
                    orientation,
                    z_range,
                    residual,
                }))
            }
            other => Err(TrajectoryError::Malformed(format!("unknown kind '{other}'"))),
        }
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}
