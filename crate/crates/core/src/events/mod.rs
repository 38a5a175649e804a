//! Event streams and the frame-to-event simulator.

mod simulator;
mod stereo;

pub use simulator::{subdivision_level, SimulatorState, EPS_LOG, CROSSING_TOL};
pub use stereo::{eye_poses, simulate_stereo, Keyframe, SimError, StereoOutput, StereoSimConfig, MAX_SUBDIVISION};

use thiserror::Error;

/// A single brightness-change event. `t` is in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub p: i8,
}

impl Event {
    /// Canonical ordering key: time, then row, then column.
    #[inline]
    pub fn key(&self) -> (u64, u16, u16) {
        (self.t, self.y, self.x)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("event {index} at ({x}, {y}) outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },
    #[error("event {index} has polarity {p}")]
    BadPolarity { index: usize, p: i8 },
    #[error("event {index} at t={t} breaks time order")]
    Unordered { index: usize, t: u64 },
    #[error("event {index} at t={t} outside [{begin}, {end}]")]
    OutsideSpan { index: usize, t: u64, begin: u64, end: u64 },
    #[error("stream span is reversed: [{0}, {1}]")]
    ReversedSpan(u64, u64),
}

/// Time-ordered events from one sensor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub t_begin: u64,
    pub t_end: u64,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(width: u16, height: u16, t_begin: u64, t_end: u64) -> Self {
        Self {
            width,
            height,
            t_begin,
            t_end,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks bounds, polarity, ordering and the time span.
    pub fn validate(&self) -> Result<(), StreamError> {
        if self.t_end < self.t_begin {
            return Err(StreamError::ReversedSpan(self.t_begin, self.t_end));
        }
        let mut last = self.t_begin;
        for (index, e) in self.events.iter().enumerate() {
            if e.x >= self.width || e.y >= self.height {
                return Err(StreamError::OutOfBounds {
                    index,
                    x: e.x,
                    y: e.y,
                    width: self.width,
                    height: self.height,
                });
            }
            if e.p != 1 && e.p != -1 {
                return Err(StreamError::BadPolarity { index, p: e.p });
            }
            if e.t < self.t_begin || e.t > self.t_end {
                return Err(StreamError::OutsideSpan {
                    index,
                    t: e.t,
                    begin: self.t_begin,
                    end: self.t_end,
                });
            }
            if e.t < last {
                return Err(StreamError::Unordered { index, t: e.t });
            }
            last = e.t;
        }
        Ok(())
    }

    /// Keeps the oldest `cap` events.
    pub fn truncate_to_cap(&mut self, cap: usize) {
        self.events.truncate(cap);
    }

    pub fn polarity_counts(&self) -> (usize, usize) {
        let pos = self.events.iter().filter(|e| e.p > 0).count();
        (pos, self.events.len() - pos)
    }
}
