use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("voxel {index}: {message}")]
    InvalidVoxel { index: usize, message: String },
    #[error("scene extent must be positive and finite, got {0}")]
    InvalidExtent(f64),
    #[error("unknown scene kind '{0}' (expected wall, staircase or random-boxes)")]
    UnknownKind(String),
    #[error("invalid scene parameter: {0}")]
    InvalidParameter(String),
}

/// Axis-aligned cube with constant opacity and color. Fields are stored in
/// single precision, matching the on-disk layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxel {
    pub center: [f32; 3],
    pub size: f32,
    pub alpha: f32,
    pub color: [f32; 3],
}

impl Voxel {
    pub fn new(center: [f32; 3], size: f32, alpha: f32, color: [f32; 3]) -> Self {
        Self {
            center,
            size,
            alpha,
            color,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(format!("non-finite center {:?}", self.center));
        }
        if !(self.size > 0.0 && self.size.is_finite()) {
            return Err(format!("size {} must be positive", self.size));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(format!("opacity {} outside [0, 1]", self.alpha));
        }
        if self.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(format!("color {:?} outside [0, 1]", self.color));
        }
        Ok(())
    }

    pub fn min_corner(&self) -> Vec3 {
        let h = self.size as f64 / 2.0;
        Vec3::new(
            self.center[0] as f64 - h,
            self.center[1] as f64 - h,
            self.center[2] as f64 - h,
        )
    }

    pub fn max_corner(&self) -> Vec3 {
        let h = self.size as f64 / 2.0;
        Vec3::new(
            self.center[0] as f64 + h,
            self.center[1] as f64 + h,
            self.center[2] as f64 + h,
        )
    }
}

/// Slab test of a ray against an axis-aligned box. Returns the parameter
/// interval `(enter, exit)` when it is non-empty.
pub(crate) fn ray_box(origin: &Vec3, inv_dir: &Vec3, lo: &Vec3, hi: &Vec3) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        if inv_dir[k].is_infinite() {
            // Ray parallel to this slab.
            if origin[k] < lo[k] || origin[k] > hi[k] {
                return None;
            }
            continue;
        }
        let a = (lo[k] - origin[k]) * inv_dir[k];
        let b = (hi[k] - origin[k]) * inv_dir[k];
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        t0 = t0.max(near);
        t1 = t1.min(far);
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Uniform grid over the scene bounds; each cell lists the voxels whose
/// boxes overlap it.
#[derive(Debug, Clone)]
struct GridIndex {
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    offsets: Vec<u32>,
    items: Vec<u32>,
}

const MAX_CELLS_PER_AXIS: usize = 128;

impl GridIndex {
    fn build(voxels: &[Voxel]) -> Option<Self> {
        if voxels.is_empty() {
            return None;
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        let mut sizes: Vec<f64> = Vec::with_capacity(voxels.len());
        for v in voxels {
            lo = lo.inf(&v.min_corner());
            hi = hi.sup(&v.max_corner());
            sizes.push(v.size as f64);
        }
        sizes.sort_by(f64::total_cmp);
        let extent = hi - lo;
        let longest = extent.max();
        // Cells about twice the median voxel size, capped per axis.
        let cell = (2.0 * sizes[sizes.len() / 2]).max(longest / MAX_CELLS_PER_AXIS as f64);
        let dims = [0, 1, 2].map(|k| ((extent[k] / cell).ceil() as usize).clamp(1, MAX_CELLS_PER_AXIS));
        let n_cells = dims[0] * dims[1] * dims[2];

        let cell_range = |v: &Voxel| -> [(usize, usize); 3] {
            let (a, b) = (v.min_corner(), v.max_corner());
            [0, 1, 2].map(|k| {
                let i0 = (((a[k] - lo[k]) / cell).floor().max(0.0) as usize).min(dims[k] - 1);
                let i1 = (((b[k] - lo[k]) / cell).floor().max(0.0) as usize).min(dims[k] - 1);
                (i0, i1)
            })
        };

        let mut counts = vec![0u32; n_cells + 1];
        for v in voxels {
            let r = cell_range(v);
            for z in r[2].0..=r[2].1 {
                for y in r[1].0..=r[1].1 {
                    for x in r[0].0..=r[0].1 {
                        counts[(z * dims[1] + y) * dims[0] + x + 1] += 1;
                    }
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut items = vec![0u32; offsets[n_cells] as usize];
        for (idx, v) in voxels.iter().enumerate() {
            let r = cell_range(v);
            for z in r[2].0..=r[2].1 {
                for y in r[1].0..=r[1].1 {
                    for x in r[0].0..=r[0].1 {
                        let c = (z * dims[1] + y) * dims[0] + x;
                        items[fill[c] as usize] = idx as u32;
                        fill[c] += 1;
                    }
                }
            }
        }
        Some(Self {
            lo,
            cell,
            dims,
            offsets,
            items,
        })
    }

    fn hi(&self) -> Vec3 {
        self.lo + Vec3::new(
            self.dims[0] as f64 * self.cell,
            self.dims[1] as f64 * self.cell,
            self.dims[2] as f64 * self.cell,
        )
    }

    /// Visits every cell pierced by the ray for `t >= 0` (3D DDA), calling
    /// `visit` with each cell's voxel list.
    fn traverse(&self, origin: &Vec3, dir: &Vec3, mut visit: impl FnMut(&[u32])) {
        let inv = dir.map(|d| 1.0 / d);
        let Some((t_enter, t_exit)) = ray_box(origin, &inv, &self.lo, &self.hi()) else {
            return;
        };
        if t_exit < 0.0 {
            return;
        }
        let t = t_enter.max(0.0);
        let p = origin + dir * t;
        let mut idx = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            let rel = ((p[k] - self.lo[k]) / self.cell).floor() as i64;
            idx[k] = rel.clamp(0, self.dims[k] as i64 - 1);
            if dir[k] > 0.0 {
                step[k] = 1;
                let boundary = self.lo[k] + (idx[k] + 1) as f64 * self.cell;
                t_max[k] = (boundary - origin[k]) * inv[k];
                t_delta[k] = self.cell * inv[k];
            } else if dir[k] < 0.0 {
                step[k] = -1;
                let boundary = self.lo[k] + idx[k] as f64 * self.cell;
                t_max[k] = (boundary - origin[k]) * inv[k];
                t_delta[k] = -self.cell * inv[k];
            }
        }
        loop {
            let c = ((idx[2] as usize * self.dims[1]) + idx[1] as usize) * self.dims[0] + idx[0] as usize;
            let (a, b) = (self.offsets[c] as usize, self.offsets[c + 1] as usize);
            if a < b {
                visit(&self.items[a..b]);
            }
            let k = if t_max[0] < t_max[1] {
                if t_max[0] < t_max[2] { 0 } else { 2 }
            } else if t_max[1] < t_max[2] {
                1
            } else {
                2
            };
            if t_max[k] > t_exit {
                break;
            }
            idx[k] += step[k];
            if idx[k] < 0 || idx[k] >= self.dims[k] as i64 {
                break;
            }
            t_max[k] += t_delta[k];
        }
    }
}

/// One ray-voxel intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub index: u32,
    /// Ray parameter at entry, clamped to 0 when the origin is inside.
    pub enter: f64,
}

/// Immutable voxel set with a uniform-grid index for ray queries.
#[derive(Debug, Clone)]
pub struct SparseVoxelScene {
    voxels: Vec<Voxel>,
    index: Option<GridIndex>,
}

impl PartialEq for SparseVoxelScene {
    fn eq(&self, other: &Self) -> bool {
        self.voxels == other.voxels
    }
}

impl SparseVoxelScene {
    pub fn new(voxels: Vec<Voxel>) -> Result<Self, SceneError> {
        for (index, v) in voxels.iter().enumerate() {
            v.validate()
                .map_err(|message| SceneError::InvalidVoxel { index, message })?;
        }
        let index = GridIndex::build(&voxels);
        Ok(Self { voxels, index })
    }

    pub fn empty() -> Self {
        Self {
            voxels: Vec::new(),
            index: None,
        }
    }

    pub fn voxels(&self) -> &[Voxel] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// All voxels hit by the ray at `t >= 0`, sorted by entry parameter
    /// (ties by voxel index). `scratch` is reused between calls.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, scratch: &mut Vec<u32>, hits: &mut Vec<Hit>) {
        hits.clear();
        scratch.clear();
        let Some(index) = &self.index else {
            return;
        };
        index.traverse(origin, dir, |ids| scratch.extend_from_slice(ids));
        scratch.sort_unstable();
        scratch.dedup();
        let inv = dir.map(|d| 1.0 / d);
        for &id in scratch.iter() {
            let v = &self.voxels[id as usize];
            if let Some((t0, t1)) = ray_box(origin, &inv, &v.min_corner(), &v.max_corner()) {
                if t1 > 0.0 && t1 > t0 {
                    hits.push(Hit {
                        index: id,
                        enter: t0.max(0.0),
                    });
                }
            }
        }
        hits.sort_by(|a, b| a.enter.total_cmp(&b.enter).then(a.index.cmp(&b.index)));
    }

    /// Reference query without the index.
    pub fn intersect_brute_force(&self, origin: &Vec3, dir: &Vec3) -> Vec<Hit> {
        let inv = dir.map(|d| 1.0 / d);
        let mut hits: Vec<Hit> = self
            .voxels
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                let (t0, t1) = ray_box(origin, &inv, &v.min_corner(), &v.max_corner())?;
                (t1 > 0.0 && t1 > t0).then_some(Hit {
                    index: i as u32,
                    enter: t0.max(0.0),
                })
            })
            .collect();
        hits.sort_by(|a, b| a.enter.total_cmp(&b.enter).then(a.index.cmp(&b.index)));
        hits
    }
}
