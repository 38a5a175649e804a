use crate::geometry::{backproject, project, CameraModel, Pose, INVALID};
use crate::image::{DepthMap, Image};

/// Two-channel `(du, dv)` displacement field in pixels; invalid pixels hold
/// the sentinel in both channels.
pub type FlowField = Image;

/// Flow induced by moving the camera, given depth in the first frame and
/// `rel`, the transform taking first-frame camera coordinates to
/// second-frame camera coordinates.
pub fn flow_from_depth(z: &DepthMap, rel: &Pose, cam: &CameraModel) -> FlowField {
    let (w, h) = (z.width(), z.height());
    let mut out = Image::filled(w, h, 2, INVALID);
    for y in 0..h {
        for x in 0..w {
            let (u, v) = (x as f64, y as f64);
            let Ok(p) = backproject(u, v, z.at(x, y), cam) else {
                continue;
            };
            let Ok(q) = project(&rel.transform(&p), cam) else {
                continue;
            };
            let px = out.pixel_mut(x, y);
            px[0] = q.u - u;
            px[1] = q.v - v;
        }
    }
    out
}

/// Largest valid flow magnitude, 0 when nothing is valid.
pub fn flow_magnitude_max(flow: &FlowField) -> f64 {
    flow.data()
        .chunks_exact(2)
        .filter(|f| f[0].is_finite() && f[1].is_finite())
        .map(|f| f[0].hypot(f[1]))
        .fold(0.0, f64::max)
}
