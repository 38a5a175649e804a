use eventforge::distill::{reproject_labels, RigPair};
use eventforge::events::{eye_poses, subdivision_level, SimulatorState};
use eventforge::losses::{trinocular, Branch, Triplet};
use eventforge::render::{flow_from_depth, make_test_scene, render, RenderOptions, SceneKind, SparseVoxelScene, TestSceneSpec, Voxel};
use eventforge::{CameraModel, DisparityMap, Image, Pose, StereoRig, Vec3};
use proptest::prelude::*;

fn wall(depth: f64) -> SparseVoxelScene {
    make_test_scene(&TestSceneSpec::new(SceneKind::Wall, 1, 4.0).with_depths(vec![depth])).unwrap()
}

#[test]
fn flow_warps_consecutive_frames_onto_each_other() {
    let cam = CameraModel::centered(80.0, 64, 48).unwrap();
    let scene = wall(2.0);
    // 0.05 m at 2 m and f = 80 is exactly 2 px.
    let prev = Pose::identity();
    let next = Pose::from_translation(Vec3::new(0.05, 0.0, 0.0));
    let a = render(&scene, &prev, &cam, &RenderOptions::default());
    let b = render(&scene, &next, &cam, &RenderOptions::default());
    let flow = flow_from_depth(&a.depth, &next.inverse().compose(&prev), &cam);
    let (ia, ib) = (a.color.luma(), b.color.luma());
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..cam.height {
        for x in 0..cam.width {
            let f = flow.pixel(x, y);
            assert!((f[0] + 2.0).abs() < 1e-9 && f[1].abs() < 1e-9, "flow {f:?} at ({x},{y})");
            let tx = x as f64 + f[0];
            if tx < 0.0 {
                continue;
            }
            sum += (ib.get(tx.round() as usize, y, 0) - ia.get(x, y, 0)).abs();
            n += 1;
        }
    }
    assert!(sum / (n as f64) < 0.02, "mean L1 {}", sum / n as f64);
}

proptest! {
    #[test]
    fn subdivision_brings_substep_flow_under_one_pixel(m in 0.0f64..5000.0) {
        let mut flow = Image::filled(2, 2, 2, 0.0);
        flow.pixel_mut(0, 1).copy_from_slice(&[m, 0.0]);
        let n = subdivision_level(&flow);
        prop_assert!(m / 2f64.powi(n as i32) <= 1.0 + 1e-12);
        if n > 0 {
            prop_assert!(m / 2f64.powi(n as i32 - 1) > 1.0);
        }
    }

    #[test]
    fn reversed_intensity_flips_polarity(a in 0.05f64..0.9, b in 0.05f64..0.9, c in 0.15f64..0.25) {
        let fa = Image::filled(2, 2, 1, a);
        let fb = Image::filled(2, 2, 1, b);
        let forward = SimulatorState::with_constant_threshold(&fa, c).unwrap().step(&fa, &fb, 0.0, 1000.0).unwrap();
        let backward = SimulatorState::with_constant_threshold(&fb, c).unwrap().step(&fb, &fa, 0.0, 1000.0).unwrap();
        prop_assert_eq!(forward.len(), backward.len());
        let sign = |ev: &[eventforge::events::Event]| ev.iter().map(|e| e.p as i32).sum::<i32>();
        prop_assert_eq!(sign(&forward), -sign(&backward));
        prop_assert!(forward.iter().all(|e| e.p == forward[0].p));
    }
}

#[test]
fn strip_hidden_from_left_left_eye_uses_right_branch() {
    let cam = CameraModel::centered(80.0, 96, 48).unwrap();
    let mut voxels = wall(4.0).voxels().to_vec();
    // Light occluder column at 1.5 m covering image columns ~40..56.
    let size = 0.025f32;
    for j in 0..40 {
        for i in 0..12 {
            let x = -0.15 + (i as f32 + 0.5) * size;
            let y = -0.5 + (j as f32 + 0.5) * size;
            let shade = if (i / 2 + j / 2) % 2 == 0 { 0.95 } else { 0.6 };
            voxels.push(Voxel::new([x, y, 1.5 + size / 2.0], size, 1.0, [shade; 3]));
        }
    }
    let scene = SparseVoxelScene::new(voxels).unwrap();
    let b = 0.1;
    let (pll, pl, pr) = eye_poses(&Pose::identity(), b);
    let draw = |p: &Pose| render(&scene, p, &cam, &RenderOptions::default());
    let (oll, ol, or) = (draw(&pll), draw(&pl), draw(&pr));
    let (ll, l, r) = (oll.color.luma(), ol.color.luma(), or.color.luma());
    let d = DisparityMap::from_fn(cam.width, cam.height, |x, y| b * cam.fx / ol.depth.at(x, y));
    let out = trinocular(Triplet { ll: &ll, l: &l, r: &r }, &d, 0.85).unwrap();

    // Occluder right edge in the left view, and the width of the strip the
    // left-left eye cannot see: difference of the two disparities.
    let edge = |x0: f64| cam.cx + cam.fx * x0 / 1.5;
    let right_edge = edge(0.15).ceil() as usize;
    let left_edge = edge(-0.15).floor() as usize;
    let strip = (b * cam.fx * (1.0 / 1.5 - 1.0 / 4.0)).floor() as usize;
    let rows = 10..38;
    let count = |xs: std::ops::Range<usize>, want: Branch| {
        let mut hit = 0;
        let mut all = 0;
        for y in rows.clone() {
            for x in xs.clone() {
                all += 1;
                hit += usize::from(out.branch_at(x, y) == want);
            }
        }
        (hit, all)
    };
    let (hit, all) = count(right_edge + 1..right_edge + strip - 1, Branch::Right);
    assert!(hit * 10 >= all * 9, "right branch at {hit}/{all} pixels right of the occluder");
    let (hit, all) = count(left_edge - strip + 2..left_edge - 1, Branch::LeftLeft);
    assert!(hit * 10 >= all * 9, "left-left branch at {hit}/{all} pixels left of the occluder");
}

/// Independent splat: explicit pinhole algebra, nearest pixel, min depth.
fn oracle_transfer(d: &DisparityMap, rigs: &RigPair) -> DisparityMap {
    let (src, dst) = (&rigs.rgb.camera, &rigs.event.camera);
    let r = rigs.extrinsic.rotation();
    let t = rigs.extrinsic.translation();
    let mut z = vec![f64::INFINITY; dst.width * dst.height];
    for y in 0..d.height() {
        for x in 0..d.width() {
            let depth = rigs.rgb.baseline * src.fx / d.at(x, y);
            let p = Vec3::new((x as f64 - src.cx) / src.fx * depth, (y as f64 - src.cy) / src.fy * depth, depth);
            let q = r * p + t;
            let u = (dst.fx * q.x / q.z + dst.cx + 0.5).floor();
            let v = (dst.fy * q.y / q.z + dst.cy + 0.5).floor();
            if u >= 0.0 && v >= 0.0 && (u as usize) < dst.width && (v as usize) < dst.height {
                let i = v as usize * dst.width + u as usize;
                z[i] = z[i].min(q.z);
            }
        }
    }
    DisparityMap::from_vec(
        dst.width,
        dst.height,
        z.iter().map(|&z| if z.is_finite() { rigs.event.baseline * dst.fx / z } else { f64::NAN }).collect(),
    )
}

#[test]
fn two_surface_transfer_matches_oracle() {
    let src = CameraModel::centered(30.0, 32, 32).unwrap();
    let dst = CameraModel::new(28.0, 29.0, 15.0, 16.5, 32, 32).unwrap();
    let ext = Pose::from_axis_angle(Vec3::new(0.1, 1.0, 0.0), 0.05, Vec3::new(-0.2, 0.03, 0.1));
    let rigs = RigPair::new(StereoRig::new(src, 0.2).unwrap(), StereoRig::new(dst, 0.15).unwrap(), ext).unwrap();
    let d = DisparityMap::from_fn(32, 32, |x, y| {
        let z = if (10..20).contains(&x) && (8..24).contains(&y) { 1.5 } else { 5.0 + 0.05 * y as f64 };
        0.2 * 30.0 / z
    });
    let got = reproject_labels(&d, &rigs, (0.5, 100.0)).unwrap();
    let want = oracle_transfer(&d, &rigs);
    for (i, (g, w)) in got.data().iter().zip(want.data()).enumerate() {
        assert_eq!(g.is_finite(), w.is_finite(), "validity differs at {i}");
        if g.is_finite() {
            assert!((g - w).abs() < 1e-9, "pixel {i}: {g} vs {w}");
        }
    }
    assert!(got.valid_count() > 32 * 32 / 2);
}
