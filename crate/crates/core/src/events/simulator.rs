use rand::Rng;
use rayon::prelude::*;

use super::stereo::SimError;
use super::Event;
use crate::image::Image;
use crate::render::{flow_magnitude_max, FlowField};

/// Offset added to intensities before taking the log.
pub const EPS_LOG: f64 = 1e-3;

/// Slack on level crossings so that changes of exactly `k * C` fire `k`
/// events despite rounding.
pub const CROSSING_TOL: f64 = 1e-9;

/// `max(ceil(log2 m), 0)` for the largest valid flow magnitude `m`; 0 for
/// empty or all-invalid flow.
pub fn subdivision_level(flow: &FlowField) -> u32 {
    level_for_magnitude(flow_magnitude_max(flow))
}

pub(crate) fn level_for_magnitude(m: f64) -> u32 {
    if !(m > 0.0) || !m.is_finite() {
        return 0;
    }
    m.log2().ceil().max(0.0) as u32
}

/// Per-pixel reference log intensity and contrast thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorState {
    width: usize,
    height: usize,
    log_ref: Vec<f64>,
    c_pos: Vec<f64>,
    c_neg: Vec<f64>,
}

#[inline]
fn log_intensity(v: f64) -> f64 {
    (v + EPS_LOG).ln()
}

impl SimulatorState {
    /// Reference levels start at the log of `first` (single-channel
    /// intensity in `[0, 1]`).
    pub fn new(first: &Image, c_pos: Vec<f64>, c_neg: Vec<f64>) -> Result<Self, SimError> {
        if first.channels() != 1 {
            return Err(SimError::InvalidInput(format!(
                "simulator expects single-channel frames, got {}",
                first.channels()
            )));
        }
        let n = first.pixel_count();
        if c_pos.len() != n || c_neg.len() != n {
            return Err(SimError::InvalidInput(format!(
                "threshold maps need {n} entries, got {} / {}",
                c_pos.len(),
                c_neg.len()
            )));
        }
        if let Some(c) = c_pos.iter().chain(&c_neg).find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(SimError::InvalidInput(format!("contrast threshold {c} must be positive")));
        }
        Ok(Self {
            width: first.width(),
            height: first.height(),
            log_ref: first.data().iter().map(|&v| log_intensity(v)).collect(),
            c_pos,
            c_neg,
        })
    }

    pub fn with_constant_threshold(first: &Image, c: f64) -> Result<Self, SimError> {
        let n = first.pixel_count();
        Self::new(first, vec![c; n], vec![c; n])
    }

    /// One draw per pixel from `U(low, high)`, shared by both polarities.
    pub fn with_uniform_thresholds<R: Rng>(
        first: &Image,
        (low, high): (f64, f64),
        rng: &mut R,
    ) -> Result<Self, SimError> {
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(SimError::InvalidInput(format!("threshold range [{low}, {high}] is invalid")));
        }
        let c: Vec<f64> = (0..first.pixel_count())
            .map(|_| if low == high { low } else { rng.random_range(low..high) })
            .collect();
        Self::new(first, c.clone(), c)
    }

    pub fn thresholds(&self) -> (&[f64], &[f64]) {
        (&self.c_pos, &self.c_neg)
    }

    pub fn reference(&self) -> &[f64] {
        &self.log_ref
    }

    /// Emits the events between two frames, assuming log intensity varies
    /// linearly in time between them. Times are in microseconds; emitted
    /// timestamps are rounded and kept inside `[t_prev, t_next]`.
    pub fn step(&mut self, prev: &Image, next: &Image, t_prev: f64, t_next: f64) -> Result<Vec<Event>, SimError> {
        let shape = (self.width, self.height, 1);
        if prev.dims() != shape || next.dims() != shape {
            return Err(SimError::SizeMismatch {
                expected: (self.width, self.height),
                got: (next.width(), next.height()),
            });
        }
        if !(t_next > t_prev && t_prev >= 0.0 && t_next.is_finite()) {
            return Err(SimError::BadTimes { t_prev, t_next });
        }
        let (lo, hi) = (t_prev.round(), t_next.round());
        let w = self.width;
        let dt = t_next - t_prev;
        let (c_pos, c_neg) = (&self.c_pos, &self.c_neg);
        let rows: Vec<Vec<Event>> = self
            .log_ref
            .par_chunks_mut(w.max(1))
            .enumerate()
            .map(|(y, refs)| {
                let mut out = Vec::new();
                for (x, l_ref) in refs.iter_mut().enumerate() {
                    let i = y * w + x;
                    let (a, b) = (prev.data()[i], next.data()[i]);
                    if !(a.is_finite() && b.is_finite()) {
                        continue;
                    }
                    let (l0, l1) = (log_intensity(a), log_intensity(b));
                    let delta = l1 - l0;
                    if delta == 0.0 {
                        continue;
                    }
                    let (c, p) = if delta > 0.0 { (c_pos[i], 1i8) } else { (-c_neg[i], -1i8) };
                    loop {
                        let level = *l_ref + c;
                        let crossed = if p > 0 { level <= l1 + CROSSING_TOL } else { level >= l1 - CROSSING_TOL };
                        if !crossed {
                            break;
                        }
                        let s = ((level - l0) / delta).clamp(0.0, 1.0);
                        let t = (t_prev + s * dt).round().clamp(lo, hi);
                        out.push(Event {
                            t: t as u64,
                            x: x as u16,
                            y: y as u16,
                            p,
                        });
                        *l_ref = level;
                    }
                }
                out
            })
            .collect();
        let mut events: Vec<Event> = rows.into_iter().flatten().collect();
        events.sort_by_key(Event::key);
        Ok(events)
    }
}
