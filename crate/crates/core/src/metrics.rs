//! Evaluation metrics for disparity, depth and images.

use crate::image::{DepthMap, DisparityMap, Image, ShapeError};
use crate::ssim::ssim;

/// Threshold used by the depth ratio accuracy.
pub const DELTA_THRESHOLD: f64 = 1.25;
/// PSNR cap applied when formatting.
pub const PSNR_TEXT_CAP: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparityMetrics {
    /// Mean absolute error, px.
    pub mae: f64,
    /// Percent of pixels with error strictly above 1, 2 and 3 px.
    pub pe1: f64,
    pub pe2: f64,
    pub pe3: f64,
    /// Pixels valid in both maps. Zero means the metrics are undefined
    /// (and NaN).
    pub count: usize,
}

impl DisparityMetrics {
    pub fn is_defined(&self) -> bool {
        self.count > 0
    }
}

pub fn disparity_metrics(pred: &DisparityMap, gt: &DisparityMap) -> Result<DisparityMetrics, ShapeError> {
    pred.check_shape(gt)?;
    let errors: Vec<f64> = pred
        .data()
        .iter()
        .zip(gt.data())
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let n = errors.len();
    if n == 0 {
        return Ok(DisparityMetrics {
            mae: f64::NAN,
            pe1: f64::NAN,
            pe2: f64::NAN,
            pe3: f64::NAN,
            count: 0,
        });
    }
    let pe = |t: f64| 100.0 * errors.iter().filter(|&&e| e > t).count() as f64 / n as f64;
    Ok(DisparityMetrics {
        mae: errors.iter().sum::<f64>() / n as f64,
        pe1: pe(1.0),
        pe2: pe(2.0),
        pe3: pe(3.0),
        count: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthImageMetrics {
    /// Mean absolute depth error, m.
    pub mae: f64,
    /// Percent of pixels with `max(z/z*, z*/z) <= 1.25`.
    pub delta125: f64,
    /// dB; `+inf` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    /// Depth pixels valid (and positive) in both maps.
    pub count: usize,
}

pub fn mse(a: &Image, b: &Image) -> Result<f64, ShapeError> {
    a.check_shape(b)?;
    let (sum, n) = a
        .data()
        .iter()
        .zip(b.data())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .fold((0.0, 0usize), |(s, n), (x, y)| (s + (x - y) * (x - y), n + 1));
    Ok(if n == 0 { f64::NAN } else { sum / n as f64 })
}

/// `-10 log10(mse)` for images in `[0, 1]`; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64, ShapeError> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// PSNR for text reports, capped at [`PSNR_TEXT_CAP`].
pub fn format_psnr(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{:.4}", v.min(PSNR_TEXT_CAP))
    }
}

pub fn depth_image_metrics(
    z_pred: &DepthMap,
    z_gt: &DepthMap,
    i_pred: &Image,
    i_gt: &Image,
) -> Result<DepthImageMetrics, ShapeError> {
    z_pred.check_shape(z_gt)?;
    let pairs: Vec<(f64, f64)> = z_pred
        .data()
        .iter()
        .zip(z_gt.data())
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (*a, *b))
        .collect();
    let n = pairs.len();
    let (mae, delta125) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mae = pairs.iter().map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
        let ok = pairs.iter().filter(|(a, b)| (a / b).max(b / a) <= DELTA_THRESHOLD).count();
        (mae, 100.0 * ok as f64 / n as f64)
    };
    Ok(DepthImageMetrics {
        mae,
        delta125,
        psnr: psnr(i_pred, i_gt)?,
        ssim: ssim(i_pred, i_gt)?,
        count: n,
    })
}
