//! Dense raster containers shared by the renderer, the simulator and the
//! loss/metric code.

use std::ops::{Deref, DerefMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("shape mismatch: {left:?} vs {right:?} (width, height, channels)")]
pub struct ShapeError {
    pub left: (usize, usize, usize),
    pub right: (usize, usize, usize),
}

/// Interleaved multi-channel `f64` raster, row-major, `(0, 0)` top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        assert!(channels > 0, "image needs at least one channel");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Wraps an existing buffer. Panics if the length does not match.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            width * height * channels,
            "buffer length does not match {width}x{height}x{channels}"
        );
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, 1, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.dims() == other.dims()
    }

    pub fn check_shape(&self, other: &Image) -> Result<(), ShapeError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(ShapeError {
                left: self.dims(),
                right: other.dims(),
            })
        }
    }

    /// Mean of the finite samples, `None` if there are none.
    pub fn mean_valid(&self) -> Option<f64> {
        let (sum, n) = self
            .data
            .iter()
            .filter(|v| v.is_finite())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Image {
        assert!(c < self.channels);
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        Image::from_vec(self.width, self.height, 1, data)
    }

    /// Rec. 601 luma of a 3-channel image; single-channel images are copied.
    pub fn luma(&self) -> Image {
        match self.channels {
            1 => self.clone(),
            3 => {
                let data = self
                    .data
                    .chunks_exact(3)
                    .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
                    .collect();
                Image::from_vec(self.width, self.height, 1, data)
            }
            n => panic!("luma undefined for {n}-channel image"),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_vec(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

macro_rules! single_channel_map {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Image);

        impl $name {
            /// All-invalid map.
            pub fn invalid(width: usize, height: usize) -> Self {
                Self(Image::filled(width, height, 1, crate::geometry::INVALID))
            }

            pub fn filled(width: usize, height: usize, value: f64) -> Self {
                Self(Image::filled(width, height, 1, value))
            }

            pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
                Self(Image::from_vec(width, height, 1, data))
            }

            pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
                Self(Image::from_fn(width, height, f))
            }

            /// Wraps a single-channel image.
            pub fn from_image(image: Image) -> Self {
                assert_eq!(image.channels(), 1, "expected a single-channel image");
                Self(image)
            }

            #[inline]
            pub fn at(&self, x: usize, y: usize) -> f64 {
                self.0.get(x, y, 0)
            }

            #[inline]
            pub fn set_at(&mut self, x: usize, y: usize, value: f64) {
                self.0.set(x, y, 0, value)
            }

            #[inline]
            pub fn is_valid_at(&self, x: usize, y: usize) -> bool {
                crate::geometry::is_valid(self.at(x, y))
            }

            pub fn valid_count(&self) -> usize {
                self.0.data().iter().filter(|v| crate::geometry::is_valid(**v)).count()
            }

            pub fn into_image(self) -> Image {
                self.0
            }
        }

        impl Deref for $name {
            type Target = Image;
            fn deref(&self) -> &Image {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut Image {
                &mut self.0
            }
        }
    };
}

single_channel_map!(
    /// Per-pixel depth along the optical axis, meters. Invalid pixels hold
    /// [`crate::geometry::INVALID`].
    DepthMap
);
single_channel_map!(
    /// Per-pixel horizontal disparity, pixels. Invalid pixels hold
    /// [`crate::geometry::INVALID`].
    DisparityMap
);
single_channel_map!(
    /// Per-pixel confidence in `[0, 1]`.
    ConfidenceMap
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major_interleaved() {
        let mut img = Image::new(3, 2, 3);
        img.set(2, 1, 1, 5.0);
        assert_eq!(img.data()[(img.width() + 2) * 3 + 1], 5.0);
        assert_eq!(img.pixel(2, 1), &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn luma_weights_sum_to_one() {
        let img = Image::filled(2, 2, 3, 0.5);
        let l = img.luma();
        assert!(l.data().iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn invalid_map_counts_zero_valid() {
        let d = DisparityMap::invalid(4, 4);
        assert_eq!(d.valid_count(), 0);
    }
}
