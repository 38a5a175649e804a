//! Structural similarity over Gaussian windows.
//!
//! 11x11 window, sigma 1.5. Windows are truncated at the image border and
//! at non-finite samples, with the remaining weights renormalized.

use crate::image::{Image, ShapeError};

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

fn kernel() -> [f64; WINDOW] {
    let r = (WINDOW / 2) as f64;
    std::array::from_fn(|k| (-((k as f64 - r).powi(2)) / (2.0 * SIGMA * SIGMA)).exp())
}

/// Separable zero-padded Gaussian filter of a `w x h` plane.
fn blur(plane: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let r = WINDOW / 2;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let xx = x as isize + j as isize - r as isize;
                if xx >= 0 && (xx as usize) < w {
                    s += kv * plane[y * w + xx as usize];
                }
            }
            tmp[y * w + x] = s;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let yy = y as isize + j as isize - r as isize;
                if yy >= 0 && (yy as usize) < h {
                    s += kv * tmp[yy as usize * w + x];
                }
            }
            out[y * w + x] = s;
        }
    }
    out
}

/// Per-pixel SSIM averaged over channels. Pixels where either input is
/// non-finite in any channel are non-finite in the output.
pub fn ssim_map(a: &Image, b: &Image) -> Result<Image, ShapeError> {
    a.check_shape(b)?;
    let (w, h, c) = a.dims();
    let k = kernel();
    let n = w * h;
    let mut acc = vec![0.0; n];
    let mut invalid = vec![false; n];
    for ch in 0..c {
        let mut planes = vec![vec![0.0; n]; 6];
        for i in 0..n {
            let (x, y) = (a.data()[i * c + ch], b.data()[i * c + ch]);
            if x.is_finite() && y.is_finite() {
                planes[0][i] = 1.0;
                planes[1][i] = x;
                planes[2][i] = y;
                planes[3][i] = x * x;
                planes[4][i] = y * y;
                planes[5][i] = x * y;
            } else {
                invalid[i] = true;
            }
        }
        let f: Vec<Vec<f64>> = planes.iter().map(|p| blur(p, w, h, &k)).collect();
        for i in 0..n {
            if invalid[i] {
                continue;
            }
            let s = f[0][i];
            let (ma, mb) = (f[1][i] / s, f[2][i] / s);
            let va = f[3][i] / s - ma * ma;
            let vb = f[4][i] / s - mb * mb;
            let cov = f[5][i] / s - ma * mb;
            acc[i] += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        }
    }
    let data = acc
        .iter()
        .zip(&invalid)
        .map(|(v, bad)| if *bad { f64::NAN } else { v / c as f64 })
        .collect();
    Ok(Image::from_vec(w, h, 1, data))
}

/// Mean SSIM over valid pixels; NaN when nothing is valid.
pub fn ssim(a: &Image, b: &Image) -> Result<f64, ShapeError> {
    Ok(ssim_map(a, b)?.mean_valid().unwrap_or(f64::NAN))
}
