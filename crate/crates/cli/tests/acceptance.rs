//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eventforge::distill::{reproject_labels, reproject_labels_audit, RigPair};
use eventforge::events::{eye_poses, simulate_stereo, subdivision_level, Event, SimulatorState, StereoSimConfig};
use eventforge::io::{evt, stk, svxl};
use eventforge::losses::{proxy_label_loss, trinocular, LossWeights, Triplet};
use eventforge::metrics::{depth_image_metrics, disparity_metrics, psnr_from_mse};
use eventforge::render::{make_test_scene, render, RenderOptions, SceneKind, SparseVoxelScene, TestSceneSpec, Voxel};
use eventforge::repr::tencode;
use eventforge::ssim::ssim;
use eventforge::trajectory::{fit_global_trajectory, local_trajectory, GlobalFitOptions, Orientation, Trajectory};
use eventforge::{CameraModel, ConfidenceMap, DepthMap, DisparityMap, Image, Pose, StereoRig, Vec3};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. Compositing exactness.
fn compositing() -> Outcome {
    let cam = CameraModel::centered(100.0, 3, 3).map_err(|e| e.to_string())?;
    let (c1, c2) = ([0.25f32, 0.5, 0.75], [1.0f32, 0.5, 0.0]);
    let (z1, z2) = (1.0, 2.0);
    let size = 0.25;
    let scene = SparseVoxelScene::new(vec![
        Voxel::new([0.0, 0.0, (z1 + size / 2.0) as f32], size as f32, 0.5, c1),
        Voxel::new([0.0, 0.0, (z2 + size / 2.0) as f32], size as f32, 0.5, c2),
    ])
    .map_err(|e| e.to_string())?;
    let out = render(&scene, &Pose::identity(), &cam, &RenderOptions::default());
    for k in 0..3 {
        let want = 0.5 * c1[k] as f64 + 0.25 * c2[k] as f64;
        ensure((out.color.get(1, 1, k) - want).abs() < 1e-9, || {
            format!("color[{k}] = {} want {want}", out.color.get(1, 1, k))
        })?;
    }
    let want_z = 0.5 * z1 + 0.25 * z2;
    ensure((out.depth.at(1, 1) - want_z).abs() < 1e-9, || format!("depth {} want {want_z}", out.depth.at(1, 1)))?;
    ensure((out.residual.get(1, 1, 0) - 0.25).abs() < 1e-9, || "residual != 0.25".into())?;

    let cam = CameraModel::centered(40.0, 48, 36).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut covered = 0;
    for seed in 0..10 {
        let spec = TestSceneSpec::new(SceneKind::RandomBoxes, seed, 4.0);
        let scene = make_test_scene(&spec).map_err(|e| e.to_string())?;
        let out = render(&scene, &Pose::identity(), &cam, &RenderOptions::default());
        for (o, r) in out.opacity.data().iter().zip(out.residual.data()) {
            worst = worst.max((o + r - 1.0).abs());
            covered += usize::from(*o > 0.0);
        }
    }
    ensure(worst < 1e-6, || format!("max |sum T a + residual - 1| = {worst:e}"))?;
    ensure(covered > 0, || "random scenes left every pixel empty".into())?;
    Ok(format!("hand case exact; max mass error {worst:.1e} over {covered} covered pixels"))
}

// 2. Subdivision rule.
fn subdivision() -> Outcome {
    for m in [0.25f64, 0.5, 1.0, 1.5, 2.0, 5.0, 8.0, 100.0] {
        let mut flow = Image::filled(3, 2, 2, 0.0);
        flow.pixel_mut(1, 1).copy_from_slice(&[m * 0.6, m * 0.8]);
        let want = (m.log2().ceil()).max(0.0) as u32;
        let got = subdivision_level(&flow);
        ensure(got == want, || format!("|F|max = {m}: n = {got}, expected {want}"))?;
    }
    Ok("8 magnitudes match".into())
}

/// Dense-time oracle: log intensity sampled every microsecond, one event
/// per threshold crossed, stamped at the first sample past the crossing.
fn brute_force_events(l0: f64, l1: f64, c: f64, t_end: u64) -> Vec<(u64, i8)> {
    let mut out = Vec::new();
    let mut reference = l0;
    for t in 1..=t_end {
        let l = l0 + (l1 - l0) * t as f64 / t_end as f64;
        while l - reference >= c - 1e-9 {
            reference += c;
            out.push((t, 1));
        }
        while reference - l >= c - 1e-9 {
            reference -= c;
            out.push((t, -1));
        }
    }
    out
}

// 3. Event threshold-count oracle.
fn threshold_oracle() -> Outcome {
    const EPS: f64 = 1e-3;
    const N: usize = 64;
    const T_END: u64 = 2000;
    const STEPS: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total = 0usize;
    for draw in 0..20 {
        let c: f64 = rng.random_range(0.15..0.25);
        let dl: f64 = rng.random_range(0.3..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let log0 = |x: usize, _y: usize| (0.1 + 0.8 * x as f64 / (N - 1) as f64 + EPS).ln();
        let change = |x: usize, y: usize| dl * (y + 1) as f64 / N as f64 * (0.5 + x as f64 / N as f64);
        let frame = |k: usize| {
            Image::from_fn(N, N, |x, y| (log0(x, y) + change(x, y) * k as f64 / STEPS as f64).exp() - EPS)
        };
        let frames: Vec<Image> = (0..=STEPS).map(frame).collect();
        let mut sim = SimulatorState::with_constant_threshold(&frames[0], c).map_err(|e| e.to_string())?;
        let mut events: Vec<Event> = Vec::new();
        let dt = T_END as f64 / STEPS as f64;
        for k in 0..STEPS {
            let step = sim
                .step(&frames[k], &frames[k + 1], k as f64 * dt, (k + 1) as f64 * dt)
                .map_err(|e| e.to_string())?;
            events.extend(step);
        }
        let mut per_pixel = vec![Vec::new(); N * N];
        for e in &events {
            per_pixel[e.y as usize * N + e.x as usize].push((e.t, e.p));
        }
        for y in 0..N {
            for x in 0..N {
                let want = brute_force_events(log0(x, y), log0(x, y) + change(x, y), c, T_END);
                let got = &per_pixel[y * N + x];
                ensure(got.len() == want.len(), || {
                    format!("draw {draw} pixel ({x},{y}): {} events, oracle {}", got.len(), want.len())
                })?;
                for ((tg, pg), (tw, pw)) in got.iter().zip(&want) {
                    ensure(pg == pw && tg.abs_diff(*tw) <= 1, || {
                        format!("draw {draw} pixel ({x},{y}): event ({tg},{pg}) vs oracle ({tw},{pw})")
                    })?;
                }
                total += want.len();
            }
        }
    }
    Ok(format!("{total} events matched across 20 draws"))
}

fn wall_setup() -> Result<(SparseVoxelScene, CameraModel, f64), String> {
    let spec = TestSceneSpec::new(SceneKind::Wall, 3, 4.0).with_depths(vec![2.0]);
    let scene = make_test_scene(&spec).map_err(|e| e.to_string())?;
    let cam = CameraModel::centered(80.0, 96, 64).map_err(|e| e.to_string())?;
    Ok((scene, cam, 0.1))
}

/// `+1`, `-1` or `0` per pixel from the tencode polarity channels.
fn polarity_map(stream: &eventforge::events::EventStream) -> Vec<i8> {
    let frame = tencode(stream, stream.len().max(1));
    let n = frame.width * frame.height;
    (0..n)
        .map(|i| {
            if frame.planes[i] > 0.0 {
                1
            } else if frame.planes[2 * n + i] > 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

// 4. End-to-end synthetic consistency.
fn end_to_end() -> Outcome {
    let (scene, cam, b) = wall_setup()?;
    let rig = StereoRig::new(cam, b).map_err(|e| e.to_string())?;
    let traj = local_trajectory(Pose::identity(), Vec3::new(0.2, 0.0, 0.0)).map_err(|e| e.to_string())?;
    let mut config = StereoSimConfig::new(0.05, 100_000, (650_000, 1_000_000));
    config.seed = 17;
    config.keyframes = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let out = simulate_stereo(&scene, &traj, &rig, &config).map_err(|e| e.to_string())?;
    let want = b * cam.fx / 2.0;
    for k in &out.keyframes {
        ensure(k.disparity.valid_count() == cam.width * cam.height, || {
            format!("keyframe {}: {} valid pixels", k.tau, k.disparity.valid_count())
        })?;
        let worst = k.disparity.data().iter().map(|d| (d - want).abs()).fold(0.0, f64::max);
        ensure(worst <= 1e-6, || format!("keyframe {}: disparity off by {worst:e}", k.tau))?;
    }
    let shift = want.round() as usize;
    ensure((want - shift as f64).abs() < 1e-12, || "analytic disparity is not integral".into())?;
    let (pl, pr) = (polarity_map(&out.left), polarity_map(&out.right));
    let (mut active, mut agree) = (0usize, 0usize);
    for y in 0..cam.height {
        for x in shift..cam.width {
            let (a, c) = (pl[y * cam.width + x], pr[y * cam.width + x - shift]);
            if a != 0 || c != 0 {
                active += 1;
                agree += usize::from(a == c);
            }
        }
    }
    ensure(active > 0, || "no active pixels".into())?;
    let ratio = agree as f64 / active as f64;
    ensure(ratio >= 0.95, || format!("polarity agreement {:.2}% over {active} pixels", 100.0 * ratio))?;
    Ok(format!(
        "{} keyframes at {want} px; polarity agreement {:.2}% of {active} active pixels ({} + {} events)",
        out.keyframes.len(),
        100.0 * ratio,
        out.left.len(),
        out.right.len()
    ))
}

// 5. Distillation round trip and z-buffer audit.
fn distillation() -> Outcome {
    let n = 128;
    let f = 100.0;
    let cam = CameraModel::centered(f, n, n).map_err(|e| e.to_string())?;
    let (b_rgb, b_evt) = (0.5, 0.3);
    let rgb = StereoRig::new(cam, b_rgb).map_err(|e| e.to_string())?;
    let event = StereoRig::new(cam, b_evt).map_err(|e| e.to_string())?;
    let extrinsic = Pose::from_translation(Vec3::new(-0.1, 0.0, 0.0));
    let rigs = RigPair::new(rgb, event, extrinsic).map_err(|e| e.to_string())?;
    let (z_front, z_back) = (2.0, 8.0);
    let depth = |x: usize, y: usize| {
        if (40..88).contains(&x) && (40..88).contains(&y) {
            z_front
        } else {
            z_back
        }
    };
    let d_rgb = DisparityMap::from_fn(n, n, |x, y| b_rgb * f / depth(x, y));
    let clip = (0.5, 100.0);

    let (d_evt, audit) = reproject_labels_audit(&d_rgb, &rigs, clip).map_err(|e| e.to_string())?;
    let plain = reproject_labels(&d_rgb, &rigs, clip).map_err(|e| e.to_string())?;
    ensure(
        plain.data().iter().zip(d_evt.data()).all(|(a, b)| a.to_bits() == b.to_bits()),
        || "audit and plain transfer disagree".into(),
    )?;
    let (mut contested, mut nearer) = (0usize, 0usize);
    for (x, y, cands) in audit.contested() {
        let lo = cands.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cands.iter().copied().fold(0.0, f64::max);
        if hi - lo > 1.0 {
            contested += 1;
            let kept = b_evt * f / d_evt.at(x, y);
            nearer += usize::from((kept - lo).abs() < 1e-9);
        }
    }
    ensure(contested > 0, || "no contested pixels".into())?;
    ensure(nearer == contested, || format!("nearer plane kept at {nearer}/{contested} contested pixels"))?;

    let back = reproject_labels(&d_evt, &rigs.inverse(), clip).map_err(|e| e.to_string())?;
    let (mut visible, mut worst) = (0usize, 0.0f64);
    for y in 0..n {
        for x in 0..n {
            let v = back.at(x, y);
            if v.is_finite() {
                visible += 1;
                worst = worst.max((v - d_rgb.at(x, y)).abs());
            }
        }
    }
    ensure(visible * 10 >= n * n * 9, || format!("only {visible} pixels survived the round trip"))?;
    ensure(worst <= 0.5, || format!("round-trip error {worst} px"))?;
    Ok(format!(
        "max round-trip error {worst:.2e} px over {visible} pixels; nearer plane kept at {contested}/{contested} contested pixels"
    ))
}

fn textured(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<f64> = (0..(w / 4 + 2) * (h / 4 + 2)).map(|_| rng.random()).collect();
    Image::from_fn(w, h, |x, y| {
        let fx = x as f64 / 4.0;
        let (i, t) = (fx.floor() as usize, fx.fract());
        let row = (y / 4) * (w / 4 + 2);
        (1.0 - t) * cells[row + i] + t * cells[row + i + 1]
    })
}

// 6. Loss degenerate identities.
fn loss_identities() -> Outcome {
    let (w, h) = (48, 32);
    let base = textured(w + 16, h, 9);
    let crop = |off: usize| Image::from_fn(w, h, |x, y| base.get(x + off, y, 0));
    let (ll, l, r) = (crop(11), crop(8), crop(5));
    let triplet = Triplet { ll: &ll, l: &l, r: &r };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d_pred = DisparityMap::from_fn(w, h, |_, _| 3.0 + rng.random_range(-0.5..0.5));
    let d_ref = DisparityMap::from_fn(w, h, |_, _| 3.0 + rng.random_range(-1.0..1.0));
    let weights = LossWeights {
        lambda_disp: 1.0,
        lambda_3p: 0.1,
        mu: 0.5,
        ..LossWeights::default()
    };

    let ones = ConfidenceMap::filled(w, h, 1.0);
    let got = proxy_label_loss(&d_pred, &d_ref, &ones, triplet, &weights).map_err(|e| e.to_string())?;
    let mae = d_pred.data().iter().zip(d_ref.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / (w * h) as f64;
    let e1 = (got.value - weights.lambda_disp * mae).abs();
    ensure(e1 <= 1e-9, || format!("conf = 1: {} vs {}", got.value, mae))?;

    let zeros = ConfidenceMap::filled(w, h, 0.0);
    let got = proxy_label_loss(&d_pred, &d_ref, &zeros, triplet, &weights).map_err(|e| e.to_string())?;
    let tri = trinocular(triplet, &d_pred, weights.beta).map_err(|e| e.to_string())?;
    let masked: f64 = tri
        .automask
        .data()
        .iter()
        .zip(tri.loss.data())
        .map(|(m, v)| if *m > 0.0 { m * v } else { 0.0 })
        .sum::<f64>()
        / (w * h) as f64;
    let e0 = (got.value - weights.lambda_3p * masked).abs();
    ensure(e0 <= 1e-9, || format!("conf = 0: {} vs {}", got.value, weights.lambda_3p * masked))?;
    let active = tri.automask.data().iter().filter(|m| **m > 0.0).count();
    ensure(active > 0, || "automask is empty".into())?;
    Ok(format!("errors {e1:.1e} and {e0:.1e}; automask active at {active} pixels"))
}

// 7. Trinocular discrimination.
fn trinocular_discrimination() -> Outcome {
    const TOL: f64 = 1e-9;
    let (scene, cam, b) = wall_setup()?;
    let (pll, pl, pr) = eye_poses(&Pose::identity(), b);
    let draw = |p: &Pose| render(&scene, p, &cam, &RenderOptions::default());
    let (oll, ol, or) = (draw(&pll), draw(&pl), draw(&pr));
    let (ll, l, r) = (oll.color.luma(), ol.color.luma(), or.color.luma());
    let triplet = Triplet { ll: &ll, l: &l, r: &r };
    let bf = b * cam.fx;
    let gt = DisparityMap::from_fn(cam.width, cam.height, |x, y| bf / ol.depth.at(x, y));
    let off = DisparityMap::from_fn(cam.width, cam.height, |x, y| gt.at(x, y) + 2.0);
    let beta = LossWeights::default().beta;
    let a = trinocular(triplet, &gt, beta).map_err(|e| e.to_string())?;
    let c = trinocular(triplet, &off, beta).map_err(|e| e.to_string())?;
    let (mut sa, mut sc, mut n) = (0.0, 0.0, 0usize);
    for (va, vc) in a.loss.data().iter().zip(c.loss.data()) {
        if va.is_finite() && vc.is_finite() {
            sa += va;
            sc += vc;
            n += 1;
        }
    }
    ensure(n > 0, || "no common valid pixels".into())?;
    let (la, lc) = (sa / n as f64, sc / n as f64);
    ensure(lc - la >= 10.0 * TOL, || format!("L(GT) = {la:e}, L(GT+2) = {lc:e}"))?;
    Ok(format!("L(GT) = {la:.3e} < L(GT+2) = {lc:.3e} over {n} pixels"))
}

// 8. Metric fixtures.
fn metric_fixtures() -> Outcome {
    let gt = DisparityMap::filled(2, 2, 10.0);
    let pred = DisparityMap::from_vec(2, 2, vec![10.5, 11.5, 12.5, 13.5]);
    let m = disparity_metrics(&pred, &gt).map_err(|e| e.to_string())?;
    ensure((m.mae, m.pe1, m.pe2, m.pe3) == (2.0, 75.0, 50.0, 25.0), || format!("{m:?}"))?;
    let p = psnr_from_mse(0.01);
    ensure((p - 20.0).abs() <= 1e-9, || format!("PSNR(0.01) = {p}"))?;
    let img = textured(40, 30, 1);
    let s = ssim(&img, &img).map_err(|e| e.to_string())?;
    ensure((s - 1.0).abs() <= 1e-9, || format!("SSIM(i, i) = {s}"))?;
    let z = DepthMap::from_fn(8, 8, |x, y| 1.0 + 0.1 * (x + y) as f64);
    let z13 = DepthMap::from_fn(8, 8, |x, y| 1.3 * z.at(x, y));
    let d = depth_image_metrics(&z13, &z, &img, &img).map_err(|e| e.to_string())?;
    ensure(d.delta125 == 0.0, || format!("delta(1.3 Z) = {}", d.delta125))?;
    Ok("MAE 2, 1/2/3PE 75/50/25, PSNR 20 dB, SSIM 1, delta 0".into())
}

fn so3_error(p: &Pose) -> (f64, f64) {
    let r = p.rotation();
    ((r.transpose() * r - eventforge::Mat3::identity()).norm(), r.determinant())
}

// 9. Spline and rotation hygiene.
fn spline_hygiene() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for set in 0..20 {
        let n = rng.random_range(12..40);
        let axis = Vec3::new(rng.random(), rng.random(), rng.random()) + Vec3::new(0.1, 0.0, 0.0);
        let mut t = Vec3::zeros();
        let poses: Vec<Pose> = (0..n)
            .map(|i| {
                t += Vec3::new(0.3 + rng.random_range(0.0..0.4), rng.random_range(-0.5..0.5), rng.random_range(-0.1..0.1));
                Pose::from_axis_angle(axis, 0.1 * i as f64 + rng.random_range(-0.2..0.2), t)
            })
            .collect();
        let orientation = if set % 2 == 0 { Orientation::FromSplines } else { Orientation::MotionAligned };
        let traj = fit_global_trajectory(&poses, GlobalFitOptions::new(1, orientation)).map_err(|e| format!("set {set}: {e}"))?;
        for _ in 0..1000 {
            let tau: f64 = rng.random();
            let p = traj.sample(tau).map_err(|e| format!("set {set}, tau {tau}: {e}"))?;
            let (orth, det) = so3_error(&p);
            ensure(det > 0.0, || format!("set {set}: det {det} at tau {tau}"))?;
            worst = worst.max(orth);
        }
    }
    ensure(worst < 1e-6, || format!("max |R^T R - I| = {worst:e}"))?;

    let start = Vec3::new(1.0, 2.0, 3.0);
    let dir = Vec3::new(2.0, -1.0, 0.5);
    let r = Pose::from_axis_angle(Vec3::new(0.3, 1.0, -0.2), 0.7, Vec3::zeros());
    let line: Vec<Pose> = (0..20).map(|i| r.with_translation(start + dir * (i as f64 / 19.0))).collect();
    let traj = fit_global_trajectory(&line, GlobalFitOptions::new(1, Orientation::FromSplines)).map_err(|e| e.to_string())?;
    let Trajectory::Global(g) = &traj else {
        return Err("expected a global trajectory".into());
    };
    let mut off_line = 0.0f64;
    for i in 0..=200 {
        let p = traj.sample(i as f64 / 200.0).map_err(|e| e.to_string())?;
        let v = p.translation() - start;
        off_line = off_line.max((v - dir * (v.dot(&dir) / dir.norm_squared())).norm());
    }
    ensure(g.residual < 1e-9 && off_line < 1e-9, || {
        format!("line residual {:e}, off-line distance {off_line:e}", g.residual)
    })?;
    Ok(format!("SO(3) error {worst:.1e} over 20000 samples; line residual {:.1e} m", g.residual))
}

fn files_of(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("read dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).expect("read file")));
            }
        }
    }
    out.sort();
    out
}

const FACTORY: &str = "\
[run]
seed = 5

[scene]
kind = random-boxes
extent = 4

[trajectory]
kind = local
base = 1 0 0 0 0 1 0 0 0 0 1 0
axis = 0.3 0.1 0

[camera]
fx = 30
width = 40
height = 30

[rig]
baselines = 0.1, 0.3

[simulation]
dtau = 0.2
t_span_us = 20000
samples = 2

[repr]
tencode_count = 500
voxel_bins = 4
";

// 10. Determinism and formats.
fn determinism_and_formats() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("factory.cfg");
    std::fs::write(&cfg, FACTORY).map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for (name, workers) in [("a", "2"), ("b", "1")] {
        let out = tmp.path().join(name);
        let args = ["eventforge", "generate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers];
        let code = eventforge_cli::run(args);
        ensure(code == 0, || format!("generate run {name} exited with {code}"))?;
        trees.push(files_of(&out));
    }
    ensure(trees[0].len() == trees[1].len(), || "runs wrote different file sets".into())?;
    for ((na, ba), (nb, bb)) in trees[0].iter().zip(&trees[1]) {
        ensure(na == nb && ba == bb, || format!("{na} differs between runs"))?;
    }

    let sample = tmp.path().join("a").join("sample_0000_b0");
    let evt_bytes = std::fs::read(sample.join("events_left.evt")).map_err(|e| e.to_string())?;
    let stream = evt::decode(&evt_bytes).map_err(|e| e.to_string())?;
    ensure(evt::encode(&stream) == evt_bytes, || "EVT1 re-encode differs".into())?;
    let path = tmp.path().join("rt.evt");
    evt::write(&path, &stream).map_err(|e| e.to_string())?;
    ensure(evt::read(&path).map_err(|e| e.to_string())? == stream, || "EVT1 read-back differs".into())?;

    let scene = make_test_scene(&TestSceneSpec::new(SceneKind::RandomBoxes, 8, 3.0)).map_err(|e| e.to_string())?;
    let path = tmp.path().join("rt.svxl");
    svxl::write(&path, &scene).map_err(|e| e.to_string())?;
    let back = svxl::read(&path).map_err(|e| e.to_string())?;
    ensure(svxl::encode(&back) == svxl::encode(&scene), || "SVXL re-encode differs".into())?;
    let bits = |v: &Voxel| (v.center.map(f32::to_bits), v.size.to_bits(), v.alpha.to_bits(), v.color.map(f32::to_bits));
    ensure(
        back.voxels().len() == scene.voxels().len() && back.voxels().iter().zip(scene.voxels()).all(|(a, b)| bits(a) == bits(b)),
        || "SVXL voxels differ".into(),
    )?;

    let frame = tencode(&stream, 300);
    let path = tmp.path().join("rt.stk");
    stk::write(&path, &frame).map_err(|e| e.to_string())?;
    let back = stk::read(&path).map_err(|e| e.to_string())?;
    ensure(
        (back.width, back.height, back.channels) == (frame.width, frame.height, frame.channels)
            && back.planes.iter().map(|v| v.to_bits()).eq(frame.planes.iter().map(|v| v.to_bits())),
        || "STK1 planes differ".into(),
    )?;
    let total: usize = trees[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!("{} files ({total} bytes) identical across runs; EVT1/SVXL/STK1 bit-exact", trees[0].len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("compositing exactness", Duration::from_secs(1), compositing),
        ("subdivision rule", Duration::from_secs(1), subdivision),
        ("event threshold-count oracle", Duration::from_secs(30), threshold_oracle),
        ("end-to-end synthetic consistency", Duration::from_secs(120), end_to_end),
        ("distillation round trip", Duration::from_secs(10), distillation),
        ("loss degenerate identities", Duration::MAX, loss_identities),
        ("trinocular discrimination", Duration::from_secs(10), trinocular_discrimination),
        ("metric fixtures", Duration::MAX, metric_fixtures),
        ("spline and rotation hygiene", Duration::MAX, spline_hygiene),
        ("determinism and formats", Duration::MAX, determinism_and_formats),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:.0?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
