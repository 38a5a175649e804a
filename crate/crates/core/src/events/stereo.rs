//! Stereo event generation along a trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::simulator::{level_for_magnitude, SimulatorState};
use super::EventStream;
use crate::geometry::{depth_to_disparity, CameraModel, Pose, StereoRig, Vec3};
use crate::image::{ConfidenceMap, DepthMap, DisparityMap, Image};
use crate::render::{flow_from_depth, flow_magnitude_max, render, RenderOptions, RenderOutput, SparseVoxelScene};
use crate::trajectory::{Trajectory, TrajectoryError};

/// Upper bound on the per-step subdivision exponent.
pub const MAX_SUBDIVISION: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("frame size mismatch: expected {expected:?}, got {got:?}")]
    SizeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("step times must satisfy 0 <= t_prev < t_next (got {t_prev}, {t_next})")]
    BadTimes { t_prev: f64, t_next: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("event caps must be positive")]
    ZeroCap,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoSimConfig {
    /// Coarse step in virtual time.
    pub dtau: f64,
    /// Duration (µs) that the virtual-time window maps onto.
    pub t_span_us: u64,
    /// Bounds of the uniform contrast-threshold distribution.
    pub thresholds: (f64, f64),
    /// Per-eye event caps (left, right).
    pub caps: (usize, usize),
    pub seed: u64,
    /// Virtual-time window simulated; events run from 0 to `t_span_us`.
    pub tau_range: (f64, f64),
    /// Virtual times at which labeled keyframes are rendered. Empty means
    /// the end of the window.
    pub keyframes: Vec<f64>,
    pub render: RenderOptions,
}

impl StereoSimConfig {
    pub fn new(dtau: f64, t_span_us: u64, caps: (usize, usize)) -> Self {
        Self {
            dtau,
            t_span_us,
            thresholds: (0.15, 0.25),
            caps,
            seed: 0,
            tau_range: (0.0, 1.0),
            keyframes: Vec::new(),
            render: RenderOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dtau > 0.0 && self.dtau <= 1.0) {
            return bad(format!("dtau {} outside (0, 1]", self.dtau));
        }
        if self.caps.0 == 0 || self.caps.1 == 0 {
            return Err(SimError::ZeroCap);
        }
        if self.t_span_us == 0 {
            return bad("t_span must be positive".into());
        }
        let (lo, hi) = self.thresholds;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("threshold range [{lo}, {hi}] is invalid"));
        }
        let (a, b) = self.tau_range;
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return bad(format!("tau range [{a}, {b}] must lie in [0, 1]"));
        }
        if let Some(k) = self.keyframes.iter().find(|k| !(a..=b).contains(*k)) {
            return bad(format!("keyframe tau {k} outside [{a}, {b}]"));
        }
        Ok(())
    }
}

/// Labels rendered at one virtual time from the left eye, plus the color
/// triplet from the left-left, left and right eyes.
#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub tau: f64,
    pub t_us: u64,
    /// Left-eye camera-to-world pose.
    pub pose: Pose,
    pub depth: DepthMap,
    pub disparity: DisparityMap,
    pub conf_ao: ConfidenceMap,
    pub conf_vsize: ConfidenceMap,
    pub rgb_ll: Image,
    pub rgb_l: Image,
    pub rgb_r: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoOutput {
    pub left: EventStream,
    pub right: EventStream,
    pub keyframes: Vec<Keyframe>,
    /// Subdivision exponent chosen for each coarse step.
    pub levels: Vec<u32>,
}

/// Camera-to-world poses of the left-left, left and right eyes. The right
/// eye sits `baseline` along the left camera's +x axis, the left-left eye
/// the same distance along -x.
pub fn eye_poses(left: &Pose, baseline: f64) -> (Pose, Pose, Pose) {
    let shift = |dx: f64| left.compose(&Pose::from_translation(Vec3::new(dx, 0.0, 0.0)));
    (shift(-baseline), *left, shift(baseline))
}

struct Eye {
    state: SimulatorState,
    stream: EventStream,
    cap: usize,
    frame: RenderOutput,
    luma: Image,
}

impl Eye {
    fn done(&self) -> bool {
        self.stream.len() >= self.cap
    }
}

/// Simulates left/right event streams over `config.tau_range` and renders
/// the labeled keyframes.
pub fn simulate_stereo(
    scene: &SparseVoxelScene,
    traj: &Trajectory,
    rig: &StereoRig,
    config: &StereoSimConfig,
) -> Result<StereoOutput, SimError> {
    config.validate()?;
    let cam = rig.camera;
    if cam.width > u16::MAX as usize || cam.height > u16::MAX as usize {
        return Err(SimError::InvalidInput(format!(
            "sensor {}x{} exceeds the event coordinate range",
            cam.width, cam.height
        )));
    }
    let b = rig.baseline;
    let (tau0, tau1) = config.tau_range;
    let span = tau1 - tau0;
    let t_span = config.t_span_us as f64;
    let time = |tau: f64| if span > 0.0 { (tau - tau0) / span * t_span } else { 0.0 };
    let poses_at = |tau: f64| -> Result<(Pose, Pose), SimError> {
        let (_, l, r) = eye_poses(&traj.sample(tau)?, b);
        Ok((l, r))
    };
    let draw = |pose: &Pose| render(scene, pose, &cam, &config.render);
    let render_pair = |l: &Pose, r: &Pose| rayon::join(|| draw(l), || draw(r));

    let new_stream = || EventStream::new(cam.width as u16, cam.height as u16, 0, config.t_span_us);
    let mut levels = Vec::new();
    let (mut left, mut right) = (new_stream(), new_stream());

    if span > 0.0 {
        let (pl, pr) = poses_at(tau0)?;
        let (fl, fr) = render_pair(&pl, &pr);
        let make_eye = |frame: RenderOutput, stream: u64, cap: usize| -> Result<Eye, SimError> {
            let luma = frame.color.luma();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream);
            Ok(Eye {
                state: SimulatorState::with_uniform_thresholds(&luma, config.thresholds, &mut rng)?,
                stream: new_stream(),
                cap,
                frame,
                luma,
            })
        };
        let mut eyes = [make_eye(fl, 1, config.caps.0)?, make_eye(fr, 2, config.caps.1)?];
        let mut prev_poses = [pl, pr];

        let steps = ((span / config.dtau) - 1e-9).ceil().max(1.0) as usize;
        for k in 0..steps {
            if eyes.iter().all(Eye::done) {
                break;
            }
            let ta = tau0 + k as f64 * config.dtau;
            let tb = if k + 1 == steps { tau1 } else { tau0 + (k + 1) as f64 * config.dtau };
            let (nl, nr) = poses_at(tb)?;
            let next_poses = [nl, nr];

            // Conservative subdivision: largest flow over the active eyes.
            let mut max_flow: f64 = 0.0;
            for (i, eye) in eyes.iter().enumerate() {
                if eye.done() {
                    continue;
                }
                let rel = next_poses[i].inverse().compose(&prev_poses[i]);
                max_flow = max_flow.max(flow_magnitude_max(&flow_from_depth(&eye.frame.depth, &rel, &cam)));
            }
            let n = level_for_magnitude(max_flow).min(MAX_SUBDIVISION);
            levels.push(n);
            let m = 1usize << n;

            let mut t_prev = time(ta);
            for j in 1..=m {
                let tau = if j == m { tb } else { ta + (tb - ta) * j as f64 / m as f64 };
                let t_next = time(tau);
                let (pl, pr) = poses_at(tau)?;
                let active = [!eyes[0].done(), !eyes[1].done()];
                let (fl, fr) = rayon::join(
                    || active[0].then(|| draw(&pl)),
                    || active[1].then(|| draw(&pr)),
                );
                for (eye, frame) in eyes.iter_mut().zip([fl, fr]) {
                    let Some(frame) = frame else { continue };
                    let luma = frame.color.luma();
                    let events = eye.state.step(&eye.luma, &luma, t_prev, t_next)?;
                    eye.stream.events.extend(events);
                    if eye.done() {
                        eye.stream.truncate_to_cap(eye.cap);
                    }
                    eye.frame = frame;
                    eye.luma = luma;
                }
                t_prev = t_next;
            }
            prev_poses = next_poses;
        }
        let [l, r] = eyes;
        left = l.stream;
        right = r.stream;
    }

    let key_taus = if config.keyframes.is_empty() { vec![tau1] } else { config.keyframes.clone() };
    let keyframes = key_taus
        .iter()
        .map(|&tau| keyframe(scene, traj, rig, &cam, &config.render, tau, time(tau)))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(StereoOutput {
        left,
        right,
        keyframes,
        levels,
    })
}

fn keyframe(
    scene: &SparseVoxelScene,
    traj: &Trajectory,
    rig: &StereoRig,
    cam: &CameraModel,
    options: &RenderOptions,
    tau: f64,
    t: f64,
) -> Result<Keyframe, SimError> {
    let pose = traj.sample(tau)?;
    let (ll, l, r) = eye_poses(&pose, rig.baseline);
    let (out_l, (out_ll, out_r)) = rayon::join(
        || render(scene, &l, cam, options),
        || rayon::join(|| render(scene, &ll, cam, options), || render(scene, &r, cam, options)),
    );
    Ok(Keyframe {
        tau,
        t_us: t.round() as u64,
        pose,
        disparity: depth_to_disparity(&out_l.depth, rig),
        depth: out_l.depth,
        conf_ao: out_l.conf_ao,
        conf_vsize: out_l.conf_vsize,
        rgb_ll: out_ll.color,
        rgb_l: out_l.color,
        rgb_r: out_r.color,
    })
}
