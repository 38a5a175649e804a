//! Training losses for proxy-label supervision: confidence truncation,
//! photometric and trinocular photometric terms, and the combined
//! confidence-gated disparity loss.

use log::warn;
use thiserror::Error;

use crate::image::{ConfidenceMap, DisparityMap, Image, ShapeError};
use crate::ssim::ssim_map;

/// Truncation threshold for occlusion-based confidence.
pub const MU_AO: f64 = 0.5;
/// Truncation threshold for voxel-size confidence.
pub const MU_VSIZE: f64 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_disp: f64,
    pub lambda_3p: f64,
    /// Confidence truncation threshold.
    pub mu: f64,
    /// SSIM share of the photometric term.
    pub beta: f64,
    pub lambda_smooth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_disp: 1.0,
            lambda_3p: 0.1,
            mu: MU_AO,
            beta: 0.85,
            lambda_smooth: 0.1,
        }
    }
}

impl LossWeights {
    /// Defaults with the voxel-size truncation threshold.
    pub fn vsize() -> Self {
        Self {
            mu: MU_VSIZE,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        let nonneg = [self.lambda_disp, self.lambda_3p, self.lambda_smooth];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(LossError::InvalidWeights(format!("weights must be non-negative: {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.mu) || !(0.0..=1.0).contains(&self.beta) {
            return Err(LossError::InvalidWeights(format!("mu and beta must lie in [0, 1]: {self:?}")));
        }
        Ok(())
    }
}

/// `0` where `c <= mu`, `c` otherwise. Non-finite confidence counts as 0.
#[inline]
pub fn truncate(c: f64, mu: f64) -> f64 {
    if c > mu {
        c
    } else {
        0.0
    }
}

pub fn truncate_conf(c: &ConfidenceMap, mu: f64) -> ConfidenceMap {
    ConfidenceMap::from_vec(c.width(), c.height(), c.data().iter().map(|&v| truncate(v, mu)).collect())
}

/// `beta (1 - SSIM) / 2 + (1 - beta) |i - i_warped|`, per pixel, averaged
/// over channels. Non-finite inputs give non-finite outputs.
pub fn photometric(i: &Image, i_warped: &Image, beta: f64) -> Result<Image, LossError> {
    let s = ssim_map(i, i_warped)?;
    let c = i.channels();
    let data = s
        .data()
        .iter()
        .enumerate()
        .map(|(p, ssim)| {
            let l1: f64 = (0..c)
                .map(|k| (i.data()[p * c + k] - i_warped.data()[p * c + k]).abs())
                .sum::<f64>()
                / c as f64;
            beta * (1.0 - ssim) / 2.0 + (1.0 - beta) * l1
        })
        .collect();
    Ok(Image::from_vec(i.width(), i.height(), 1, data))
}

/// Backward horizontal warp: `out(x, y) = img(x + sign * d(x, y), y)` with
/// linear interpolation. Samples outside the image, or with invalid
/// disparity, are non-finite in every channel.
pub fn warp_horizontal(img: &Image, d: &DisparityMap, sign: f64) -> Result<Image, LossError> {
    let (w, h, c) = img.dims();
    if (d.width(), d.height()) != (w, h) {
        return Err(ShapeError {
            left: img.dims(),
            right: d.dims(),
        }
        .into());
    }
    let mut out = Image::filled(w, h, c, f64::NAN);
    for y in 0..h {
        for x in 0..w {
            let src = x as f64 + sign * d.at(x, y);
            if !(src >= 0.0 && src <= (w - 1) as f64) {
                continue;
            }
            let x0 = (src.floor() as usize).min(w - 1);
            let x1 = (x0 + 1).min(w - 1);
            let f = src - x0 as f64;
            for k in 0..c {
                let v = (1.0 - f) * img.get(x0, y, k) + if f > 0.0 { f * img.get(x1, y, k) } else { 0.0 };
                out.set(x, y, k, v);
            }
        }
    }
    Ok(out)
}

/// Which flanking view supplied the trinocular minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    LeftLeft,
    Right,
    /// Both warps fell outside the image.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrinocularOutput {
    /// Per-pixel minimum warped photometric loss; non-finite where no warp
    /// is valid.
    pub loss: Image,
    /// 1 where the warped minimum beats the un-warped minimum, else 0.
    pub automask: Image,
    pub branch: Vec<Branch>,
}

impl TrinocularOutput {
    pub fn branch_at(&self, x: usize, y: usize) -> Branch {
        self.branch[y * self.loss.width() + x]
    }
}

/// Images from the left-left, left and right eyes of a rectified rig with
/// equal baselines.
#[derive(Debug, Clone, Copy)]
pub struct Triplet<'a> {
    pub ll: &'a Image,
    pub l: &'a Image,
    pub r: &'a Image,
}

fn nan_min(a: f64, b: f64) -> (f64, Branch) {
    match (a.is_finite(), b.is_finite()) {
        (true, true) if a <= b => (a, Branch::LeftLeft),
        (true, true) => (b, Branch::Right),
        (true, false) => (a, Branch::LeftLeft),
        (false, true) => (b, Branch::Right),
        (false, false) => (f64::NAN, Branch::None),
    }
}

/// Trinocular photometric loss of the left view against the left-left
/// view warped by `+d` and the right view warped by `-d`, plus the
/// automask against the un-warped views.
pub fn trinocular(t: Triplet, d: &DisparityMap, beta: f64) -> Result<TrinocularOutput, LossError> {
    t.l.check_shape(t.ll)?;
    t.l.check_shape(t.r)?;
    let from_ll = photometric(t.l, &warp_horizontal(t.ll, d, 1.0)?, beta)?;
    let from_r = photometric(t.l, &warp_horizontal(t.r, d, -1.0)?, beta)?;
    let id_ll = photometric(t.l, t.ll, beta)?;
    let id_r = photometric(t.l, t.r, beta)?;
    let n = from_ll.data().len();
    let mut loss = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    let mut branch = Vec::with_capacity(n);
    for p in 0..n {
        let (v, b) = nan_min(from_ll.data()[p], from_r.data()[p]);
        let (id, _) = nan_min(id_ll.data()[p], id_r.data()[p]);
        loss.push(v);
        branch.push(b);
        mask.push(if v.is_finite() && id.is_finite() && v < id { 1.0 } else { 0.0 });
    }
    let (w, h) = (t.l.width(), t.l.height());
    Ok(TrinocularOutput {
        loss: Image::from_vec(w, h, 1, loss),
        automask: Image::from_vec(w, h, 1, mask),
        branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Pixels where both disparities were valid.
    pub valid_pixels: usize,
    /// Set when no pixel was valid; `value` is then 0.
    pub degenerate: bool,
}

/// Confidence-gated proxy-label loss, averaged over pixels where both
/// disparities are valid:
/// `l_disp * eta(C) * |d_pred - d_ref| + M * l_3p * (1 - eta(C)) * L_3p`,
/// with the trinocular term evaluated under `d_pred` and counted as zero
/// wherever the automask `M` is zero.
pub fn proxy_label_loss(
    d_pred: &DisparityMap,
    d_ref: &DisparityMap,
    conf: &ConfidenceMap,
    triplet: Triplet,
    weights: &LossWeights,
) -> Result<LossValue, LossError> {
    weights.validate()?;
    d_pred.check_shape(d_ref)?;
    d_pred.check_shape(conf)?;
    let tri = trinocular(triplet, d_pred, weights.beta)?;
    if (tri.loss.width(), tri.loss.height()) != (d_pred.width(), d_pred.height()) {
        return Err(ShapeError {
            left: d_pred.dims(),
            right: tri.loss.dims(),
        }
        .into());
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for p in 0..d_pred.data().len() {
        let (a, b) = (d_pred.data()[p], d_ref.data()[p]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        let eta = truncate(conf.data()[p], weights.mu);
        let mut term = weights.lambda_disp * eta * (a - b).abs();
        if tri.automask.data()[p] > 0.0 {
            term += weights.lambda_3p * (1.0 - eta) * tri.loss.data()[p];
        }
        sum += term;
        n += 1;
    }
    if n == 0 {
        warn!("proxy-label loss has no valid pixels; reporting 0");
        return Ok(LossValue {
            value: 0.0,
            valid_pixels: 0,
            degenerate: true,
        });
    }
    Ok(LossValue {
        value: sum / n as f64,
        valid_pixels: n,
        degenerate: false,
    })
}

/// `sum w_i * term_i`.
pub fn weighted_sum_loss(terms: &[(f64, f64)]) -> f64 {
    terms.iter().map(|(t, w)| t * w).sum()
}
