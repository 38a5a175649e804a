//! Procedural scenes for tests and small datasets. The camera is assumed
//! at the origin looking down +z.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scene::{SceneError, SparseVoxelScene, Voxel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Wall,
    Staircase,
    RandomBoxes,
}

impl SceneKind {
    pub fn parse(s: &str) -> Result<Self, SceneError> {
        match s {
            "wall" => Ok(Self::Wall),
            "staircase" => Ok(Self::Staircase),
            "random-boxes" => Ok(Self::RandomBoxes),
            other => Err(SceneError::UnknownKind(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Wall => "wall",
            Self::Staircase => "staircase",
            Self::RandomBoxes => "random-boxes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSceneSpec {
    pub kind: SceneKind,
    pub seed: u64,
    /// Side length (m) of the textured area at the nearest depth.
    pub extent: f64,
    /// Wall: first entry is the slab depth. Staircase: one slab per entry.
    /// Random boxes: first entry is the nearest box depth.
    pub depths: Vec<f64>,
    /// Voxel edge length (m) at the nearest depth.
    pub voxel_size: f64,
    /// Checkerboard cell width in voxels.
    pub checker: usize,
    /// Number of boxes for `RandomBoxes`.
    pub boxes: usize,
}

impl TestSceneSpec {
    pub fn new(kind: SceneKind, seed: u64, extent: f64) -> Self {
        let depths = match kind {
            SceneKind::Staircase => vec![1.0, 2.0, 4.0],
            _ => vec![2.0],
        };
        Self {
            kind,
            seed,
            extent,
            depths,
            voxel_size: extent / 128.0,
            checker: 4,
            boxes: 24,
        }
    }

    pub fn with_depths(mut self, depths: Vec<f64>) -> Self {
        self.depths = depths;
        self
    }

    pub fn with_voxel_size(mut self, size: f64) -> Self {
        self.voxel_size = size;
        self
    }

    pub fn with_checker(mut self, checker: usize) -> Self {
        self.checker = checker;
        self
    }

    fn validate(&self) -> Result<(), SceneError> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(SceneError::InvalidExtent(self.extent));
        }
        let bad = |m: String| Err(SceneError::InvalidParameter(m));
        if self.depths.is_empty() || self.depths.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad(format!("depths must be positive, got {:?}", self.depths));
        }
        if !(self.voxel_size > 0.0 && self.voxel_size <= self.extent) {
            return bad(format!("voxel size {} must lie in (0, extent]", self.voxel_size));
        }
        if self.checker == 0 {
            return bad("checker width must be at least 1".into());
        }
        if self.kind == SceneKind::RandomBoxes && self.boxes == 0 {
            return bad("random-boxes needs at least one box".into());
        }
        Ok(())
    }
}

/// Checkerboard palette with seeded per-cell jitter.
struct Palette {
    cells: usize,
    colors: Vec<[f32; 3]>,
}

impl Palette {
    fn new(rng: &mut ChaCha8Rng, cells: usize) -> Self {
        let colors = (0..cells * cells)
            .map(|i| {
                let (cx, cy) = (i % cells, i / cells);
                let base: f32 = if (cx + cy) % 2 == 0 { 0.75 } else { 0.25 };
                [0, 1, 2].map(|_| (base + rng.random_range(-0.2f32..0.2)).clamp(0.0, 1.0))
            })
            .collect();
        Self { cells, colors }
    }

    fn at(&self, i: usize, j: usize, checker: usize) -> [f32; 3] {
        let (cx, cy) = ((i / checker).min(self.cells - 1), (j / checker).min(self.cells - 1));
        self.colors[cy * self.cells + cx]
    }
}

/// Fronto-parallel slab of `n x n` opaque voxels whose front face lies at
/// `depth` and spans `[t0, t1]` in tan-space along x and `[-h, h]` along y.
#[allow(clippy::too_many_arguments)]
fn slab(
    depth: f64,
    size: f64,
    (t0, t1): (f64, f64),
    half_y: f64,
    palette: &Palette,
    checker: usize,
    column_offset: usize,
    out: &mut Vec<Voxel>,
) {
    let nx = ((t1 - t0) * depth / size).round().max(1.0) as usize;
    let ny = ((2.0 * half_y) * depth / size).round().max(1.0) as usize;
    let z = (depth + size / 2.0) as f32;
    for j in 0..ny {
        for i in 0..nx {
            let x = t0 * depth + (i as f64 + 0.5) * size;
            let y = -half_y * depth + (j as f64 + 0.5) * size;
            out.push(Voxel::new(
                [x as f32, y as f32, z],
                size as f32,
                1.0,
                palette.at(column_offset + i, j, checker),
            ));
        }
    }
}

pub fn make_test_scene(spec: &TestSceneSpec) -> Result<SparseVoxelScene, SceneError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut voxels = Vec::new();
    let near = spec.depths.iter().cloned().fold(f64::INFINITY, f64::min);
    // Voxels per side at the nearest depth.
    let n = (spec.extent / spec.voxel_size).round().max(1.0) as usize;
    let half = spec.extent / 2.0 / near;
    match spec.kind {
        SceneKind::Wall => {
            let palette = Palette::new(&mut rng, n.div_ceil(spec.checker));
            let d = spec.depths[0];
            let size = spec.voxel_size * d / near;
            slab(d, size, (-half, half), half, &palette, spec.checker, 0, &mut voxels);
        }
        SceneKind::Staircase => {
            // One vertical band per depth, equal widths in tan-space, voxel
            // size proportional to depth so every band has the same
            // on-screen footprint.
            let k = spec.depths.len();
            let per_band = (n / k).max(1);
            let palette = Palette::new(&mut rng, (per_band * k).div_ceil(spec.checker).max(n.div_ceil(spec.checker)));
            let step = spec.voxel_size / near;
            for (b, &d) in spec.depths.iter().enumerate() {
                let t0 = -half + (b * per_band) as f64 * step;
                let t1 = t0 + per_band as f64 * step;
                slab(d, step * d, (t0, t1), half, &palette, spec.checker, b * per_band, &mut voxels);
            }
        }
        SceneKind::RandomBoxes => {
            let e = spec.extent;
            for _ in 0..spec.boxes {
                let k: usize = rng.random_range(1..=4);
                let side = rng.random_range(0.05 * e..0.2 * e);
                let alpha = rng.random_range(0.3f32..=1.0);
                let base = [0, 1, 2].map(|_| rng.random_range(0.1f32..0.9));
                let c = [
                    rng.random_range(-e / 2.0..e / 2.0),
                    rng.random_range(-e / 2.0..e / 2.0),
                    rng.random_range(near..near + e),
                ];
                let s = side / k as f64;
                for iz in 0..k {
                    for iy in 0..k {
                        for ix in 0..k {
                            let off = |i: usize| (i as f64 + 0.5) * s - side / 2.0;
                            let color = base.map(|v| (v + rng.random_range(-0.1f32..0.1)).clamp(0.0, 1.0));
                            voxels.push(Voxel::new(
                                [(c[0] + off(ix)) as f32, (c[1] + off(iy)) as f32, (c[2] + off(iz)) as f32],
                                s as f32,
                                alpha,
                                color,
                            ));
                        }
                    }
                }
            }
        }
    }
    SparseVoxelScene::new(voxels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraModel, Pose};
    use crate::render::{render, RenderOptions};

    #[test]
    fn wall_depth_is_exact() {
        let spec = TestSceneSpec::new(SceneKind::Wall, 1, 4.0).with_voxel_size(0.05);
        let scene = make_test_scene(&spec).unwrap();
        let cam = CameraModel::centered(40.0, 48, 32).unwrap();
        let out = render(&scene, &Pose::identity(), &cam, &RenderOptions::default());
        assert_eq!(out.depth.valid_count(), 48 * 32);
        for &z in out.depth.data() {
            assert!((z - 2.0).abs() < 1e-6, "{z}");
        }
    }

    #[test]
    fn seeded_scenes_are_reproducible() {
        for kind in [SceneKind::Wall, SceneKind::Staircase, SceneKind::RandomBoxes] {
            let spec = TestSceneSpec::new(kind, 42, 2.0);
            assert_eq!(make_test_scene(&spec).unwrap().voxels(), make_test_scene(&spec).unwrap().voxels());
            let other = TestSceneSpec::new(kind, 43, 2.0);
            assert_ne!(make_test_scene(&spec).unwrap().voxels(), make_test_scene(&other).unwrap().voxels());
        }
    }

    #[test]
    fn random_boxes_opacity_range() {
        let scene = make_test_scene(&TestSceneSpec::new(SceneKind::RandomBoxes, 9, 3.0)).unwrap();
        assert!(scene.voxels().iter().all(|v| (0.3..=1.0).contains(&v.alpha)));
    }

    #[test]
    fn staircase_histogram_has_one_mode_per_depth() {
        let spec = TestSceneSpec::new(SceneKind::Staircase, 5, 2.0).with_voxel_size(0.02);
        let scene = make_test_scene(&spec).unwrap();
        let cam = CameraModel::centered(60.0, 96, 48).unwrap();
        let out = render(&scene, &Pose::identity(), &cam, &RenderOptions::default());
        // Histogram oracle: 0.05 m bins, a mode is a bin holding at least
        // 5% of the covered pixels.
        let valid: Vec<f64> = out.depth.data().iter().cloned().filter(|z| z.is_finite()).collect();
        let mut bins = std::collections::BTreeMap::<i64, usize>::new();
        for z in &valid {
            *bins.entry((z / 0.05).round() as i64).or_default() += 1;
        }
        let modes: Vec<f64> = bins
            .iter()
            .filter(|(_, &c)| c * 20 >= valid.len())
            .map(|(&b, _)| b as f64 * 0.05)
            .collect();
        assert_eq!(modes.len(), 3, "{bins:?}");
        for (m, d) in modes.iter().zip([1.0, 2.0, 4.0]) {
            assert!((m - d).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_extent_rejected() {
        let spec = TestSceneSpec::new(SceneKind::Wall, 0, 0.0);
        assert!(matches!(make_test_scene(&spec), Err(SceneError::InvalidExtent(_))));
        assert!(SceneKind::parse("cube").is_err());
    }
}
