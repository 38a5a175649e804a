//! Top-view alpha-shape loops through captured camera positions.

use std::collections::BTreeMap;

use spade::{DelaunayTriangulation, Point2, Triangulation};

use super::TrajectoryError;
use crate::geometry::Pose;

/// Ordered boundary loop of the alpha shape.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPath {
    /// Input pose indices along the loop; the first vertex is not repeated.
    pub indices: Vec<usize>,
    /// Loop vertices lifted back to 3D poses.
    pub poses: Vec<Pose>,
    pub alpha: f64,
}

impl AlphaPath {
    /// Loop poses with the first vertex appended, ready for a spline fit.
    pub fn closed_poses(&self) -> Vec<Pose> {
        let mut out = self.poses.clone();
        out.extend(self.poses.first().copied());
        out
    }
}

fn top_view(poses: &[Pose]) -> Vec<[f64; 2]> {
    poses
        .iter()
        .map(|p| [p.translation().x, p.translation().y])
        .collect()
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Twice the median nearest-neighbor distance of the top-view projections.
pub fn default_alpha(poses: &[Pose]) -> f64 {
    let pts = top_view(poses);
    let mut nn: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|(j, q)| *j != i && dist2(*p, **q) > 0.0)
                .map(|(_, q)| dist2(*p, *q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .filter(|d| d.is_finite())
        .collect();
    if nn.is_empty() {
        return 0.0;
    }
    nn.sort_by(|a, b| a.total_cmp(b));
    let mid = nn.len() / 2;
    let median = if nn.len().is_multiple_of(2) {
        0.5 * (nn[mid - 1] + nn[mid])
    } else {
        nn[mid]
    };
    2.0 * median
}

/// Nearest input pose to a top-view point; ties keep the lowest index.
fn nearest(points: &[[f64; 2]], q: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = dist2(*p, q);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Alpha-shape boundary of the `(x, y)` projections of `poses`, ordered
/// counter-clockwise from its lowest-index vertex and lifted back to 3D by
/// nearest-neighbor lookup.
///
/// The shape keeps the Delaunay triangles whose circumradius is at most
/// `alpha`; the boundary is the set of edges owned by exactly one kept
/// triangle. When the boundary has several loops the longest is returned.
/// `alpha = None` selects [`default_alpha`].
pub fn alpha_shape_path(poses: &[Pose], alpha: Option<f64>) -> Result<AlphaPath, TrajectoryError> {
    if poses.len() < 4 {
        return Err(TrajectoryError::TooFewPoses {
            got: poses.len(),
            need: 4,
        });
    }
    let alpha = alpha.unwrap_or_else(|| default_alpha(poses));
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(TrajectoryError::InvalidAlpha(alpha));
    }
    let pts = top_view(poses);

    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    // Triangulation vertex index -> first input index at that position.
    let mut owner: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let h = tri
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| TrajectoryError::DegeneratePoints(format!("{e:?}")))?;
        if h.index() == owner.len() {
            owner.push(i);
        }
    }
    if tri.num_inner_faces() == 0 {
        return Err(TrajectoryError::DegeneratePoints(
            "projected positions are collinear".into(),
        ));
    }

    let limit = (alpha * (1.0 + 1e-9)).powi(2);
    let mut edge_use: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for face in tri.inner_faces() {
        let (_, r2) = face.circumcircle();
        if r2 > limit {
            continue;
        }
        let v = face.vertices().map(|h| owner[h.fix().index()]);
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            *edge_use.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&(a, b), &n) in &edge_use {
        if n == 1 {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
    }
    if adjacency.is_empty() {
        return Err(TrajectoryError::DegeneratePoints(format!(
            "no triangle has circumradius <= alpha ({alpha})"
        )));
    }

    let mut used: BTreeMap<(usize, usize), bool> =
        edge_use.iter().filter(|(_, n)| **n == 1).map(|(k, _)| (*k, false)).collect();
    let mut best: Vec<usize> = Vec::new();
    for &start in adjacency.keys() {
        if adjacency[&start]
            .iter()
            .all(|&n| used[&(start.min(n), start.max(n))])
        {
            continue;
        }
        let walk = walk_loop(start, &adjacency, &mut used);
        if walk.len() > best.len() {
            best = walk;
        }
    }
    if best.len() < 3 {
        return Err(TrajectoryError::DegeneratePoints(
            "alpha-shape boundary has no closed loop".into(),
        ));
    }

    // Counter-clockwise traversal, starting at the lowest index.
    let area: f64 = best
        .iter()
        .zip(best.iter().cycle().skip(1))
        .map(|(&a, &b)| pts[a][0] * pts[b][1] - pts[b][0] * pts[a][1])
        .sum();
    if area < 0.0 {
        best[1..].reverse();
    }
    let lowest = best
        .iter()
        .enumerate()
        .min_by_key(|(_, v)| **v)
        .map(|(i, _)| i)
        .unwrap_or(0);
    best.rotate_left(lowest);

    let indices: Vec<usize> = best.iter().map(|&v| nearest(&pts, pts[v])).collect();
    let lifted = indices.iter().map(|&i| poses[i]).collect();
    Ok(AlphaPath {
        indices,
        poses: lifted,
        alpha,
    })
}

/// Follows unused boundary edges from `start`, always taking the
/// lowest-index neighbor, until it returns to `start` or gets stuck.
fn walk_loop(
    start: usize,
    adjacency: &BTreeMap<usize, Vec<usize>>,
    used: &mut BTreeMap<(usize, usize), bool>,
) -> Vec<usize> {
    let mut path = vec![start];
    let mut cur = start;
    loop {
        let mut next = None;
        let mut neighbors = adjacency[&cur].clone();
        neighbors.sort_unstable();
        for n in neighbors {
            let key = (cur.min(n), cur.max(n));
            if !used[&key] {
                used.insert(key, true);
                next = Some(n);
                break;
            }
        }
        match next {
            Some(n) if n == start => return path,
            Some(n) => {
                path.push(n);
                cur = n;
            }
            None => return path,
        }
    }
}
