//! Event-stereo data factory.
//!
//! Synthesizes stereo event streams, proxy disparity labels and confidence
//! maps from sparse voxel scenes traversed by virtual camera trajectories,
//! transfers RGB-side disparity onto calibrated event cameras, and provides
//! the matching loss and metric suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distill;
pub mod events;
pub mod geometry;
pub mod image;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod render;
pub mod repr;
pub mod ssim;
pub mod trajectory;

pub use geometry::{CameraModel, Pose, StereoRig, Vec3, Mat3, INVALID};
pub use image::{ConfidenceMap, DepthMap, DisparityMap, Image};
