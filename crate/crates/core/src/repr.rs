//! Dense tensor encodings of event streams.

use crate::events::EventStream;

/// Window the frame was built from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowInfo {
    pub t_max: u64,
    pub dt: u64,
    pub count: usize,
}

/// Planar `C x H x W` single-precision stack.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedFrame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub planes: Vec<f32>,
    pub window: WindowInfo,
}

impl StackedFrame {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            planes: vec![0.0; width * height * channels],
            window: WindowInfo::default(),
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.planes[self.index(x, y, c)]
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.planes[c * n..(c + 1) * n]
    }
}

/// Three-channel encoding of the newest `count` events: the latest event at
/// each pixel writes `(1, age, 0)` if positive and `(0, age, 1)` otherwise,
/// with `age = (t_max - t) / dt` normalized over the selected window.
pub fn tencode(stream: &EventStream, count: usize) -> StackedFrame {
    assert!(count >= 1, "tencode needs count >= 1");
    let (w, h) = (stream.width as usize, stream.height as usize);
    let mut frame = StackedFrame::zeros(w, h, 3);
    let start = stream.events.len().saturating_sub(count);
    let selected = &stream.events[start..];
    let (Some(first), Some(last)) = (selected.first(), selected.last()) else {
        return frame;
    };
    let t_max = last.t;
    let dt = (t_max - first.t).max(1);
    frame.window = WindowInfo {
        t_max,
        dt,
        count: selected.len(),
    };
    // Replay in stream order so the newest event at a pixel wins.
    for e in selected {
        let (x, y) = (e.x as usize, e.y as usize);
        let age = ((t_max - e.t) as f64 / dt as f64) as f32;
        let (pos, neg) = if e.p > 0 { (1.0, 0.0) } else { (0.0, 1.0) };
        let (i0, i1, i2) = (frame.index(x, y, 0), frame.index(x, y, 1), frame.index(x, y, 2));
        frame.planes[i0] = pos;
        frame.planes[i1] = age;
        frame.planes[i2] = neg;
    }
    frame
}

const WEIGHT_SCALE: f64 = 65536.0;

/// Polarity-signed event counts spread over `bins` temporal bins; each
/// event's unit mass is split linearly between its two nearest bins.
///
/// Split weights are rounded to multiples of 2^-16 so per-cell sums stay
/// exact in single precision and the signed mass is conserved exactly.
pub fn voxel_grid(stream: &EventStream, bins: usize) -> StackedFrame {
    assert!(bins >= 1, "voxel grid needs at least one bin");
    let (w, h) = (stream.width as usize, stream.height as usize);
    let mut frame = StackedFrame::zeros(w, h, bins);
    let (Some(first), Some(last)) = (stream.events.first(), stream.events.last()) else {
        return frame;
    };
    let span = (last.t - first.t) as f64;
    let mut acc = vec![0.0f64; frame.planes.len()];
    for e in &stream.events {
        let pos = if span > 0.0 { (e.t - first.t) as f64 / span * (bins - 1) as f64 } else { 0.0 };
        let lo = (pos.floor() as usize).min(bins - 1);
        let frac = ((pos - lo as f64) * WEIGHT_SCALE).round() / WEIGHT_SCALE;
        let p = if e.p > 0 { 1.0 } else { -1.0 };
        let (x, y) = (e.x as usize, e.y as usize);
        acc[frame.index(x, y, lo)] += p * (1.0 - frac);
        if frac > 0.0 {
            acc[frame.index(x, y, lo + 1)] += p * frac;
        }
    }
    frame.planes = acc.into_iter().map(|v| v as f32).collect();
    frame.window = WindowInfo {
        t_max: last.t,
        dt: last.t - first.t,
        count: stream.events.len(),
    };
    frame
}
