//! Clamped uniform cubic B-splines on `[0, 1]` with least-squares fitting.

use nalgebra::DMatrix;

use super::TrajectoryError;

const DEGREE: usize = 3;

/// Ridge added to the normal equations.
pub const RIDGE: f64 = 1e-10;

/// Iterative-refinement passes applied after the ridge solve; each pass
/// removes most of the bias the ridge term introduces.
const REFINEMENT_STEPS: usize = 3;

/// Vector-valued cubic B-spline with clamped end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicBSpline {
    knots: Vec<f64>,
    coeffs: Vec<[f64; 3]>,
}

impl CubicBSpline {
    /// Clamped knot vector with `breakpoints` distinct, uniformly spaced
    /// values on `[0, 1]`.
    pub fn uniform_knots(breakpoints: usize) -> Vec<f64> {
        assert!(breakpoints >= 2);
        let segments = breakpoints - 1;
        let mut knots = vec![0.0; DEGREE];
        knots.extend((0..=segments).map(|i| i as f64 / segments as f64));
        knots.extend(std::iter::repeat_n(1.0, DEGREE));
        knots
    }

    pub fn from_parts(knots: Vec<f64>, coeffs: Vec<[f64; 3]>) -> Result<Self, TrajectoryError> {
        if knots.len() != coeffs.len() + DEGREE + 1 || coeffs.len() <= DEGREE {
            return Err(TrajectoryError::Malformed(format!(
                "{} knots do not fit {} cubic coefficients",
                knots.len(),
                coeffs.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(TrajectoryError::Malformed("knots must be non-decreasing".into()));
        }
        Ok(Self { knots, coeffs })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coeffs(&self) -> &[[f64; 3]] {
        &self.coeffs
    }

    /// Least-squares fit of `values` sampled at parameters `params`.
    ///
    /// Solves `(B^T B + RIDGE I) c = B^T y` by Cholesky and refines the
    /// solution against the unregularized system.
    pub fn fit(
        knots: Vec<f64>,
        params: &[f64],
        values: &[[f64; 3]],
    ) -> Result<Self, TrajectoryError> {
        assert_eq!(params.len(), values.len());
        let n_ctrl = knots.len() - DEGREE - 1;
        if params.len() < n_ctrl {
            return Err(TrajectoryError::TooFewPoses {
                got: params.len(),
                need: n_ctrl,
            });
        }

        let mut design = DMatrix::<f64>::zeros(params.len(), n_ctrl);
        for (row, &t) in params.iter().enumerate() {
            let span = find_span(&knots, n_ctrl, t);
            let basis = basis_functions(&knots, span, t);
            for (j, b) in basis.iter().enumerate() {
                design[(row, span - DEGREE + j)] = *b;
            }
        }
        let rhs = DMatrix::from_fn(values.len(), 3, |r, c| values[r][c]);

        let normal = design.transpose() * &design;
        let atb = design.transpose() * &rhs;
        let regularized = &normal + DMatrix::<f64>::identity(n_ctrl, n_ctrl) * RIDGE;
        let chol = regularized
            .cholesky()
            .ok_or(TrajectoryError::DegenerateFit)?;
        let mut sol = chol.solve(&atb);
        for _ in 0..REFINEMENT_STEPS {
            let residual = &atb - &normal * &sol;
            sol += chol.solve(&residual);
        }

        let coeffs = (0..n_ctrl)
            .map(|i| [sol[(i, 0)], sol[(i, 1)], sol[(i, 2)]])
            .collect();
        Ok(Self { knots, coeffs })
    }

    fn n_ctrl(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        let span = find_span(&self.knots, self.n_ctrl(), t);
        let basis = basis_functions(&self.knots, span, t);
        self.combine(span, &basis)
    }

    /// First derivative with respect to the parameter.
    pub fn derivative(&self, t: f64) -> [f64; 3] {
        let span = find_span(&self.knots, self.n_ctrl(), t);
        let basis = basis_derivatives(&self.knots, span, t);
        self.combine(span, &basis)
    }

    /// Second derivative with respect to the parameter.
    pub fn second_derivative(&self, t: f64) -> [f64; 3] {
        let k = &self.knots;
        let p = DEGREE as f64;
        let span = find_span(k, self.n_ctrl(), t);
        // Control points of the first-derivative (quadratic) spline.
        let q = |i: usize| -> [f64; 3] {
            let den = k[i + DEGREE + 1] - k[i + 1];
            if den > 0.0 {
                [0, 1, 2].map(|c| p * (self.coeffs[i + 1][c] - self.coeffs[i][c]) / den)
            } else {
                [0.0; 3]
            }
        };
        // Control points of the second-derivative (linear) spline.
        let r = |i: usize| -> [f64; 3] {
            let den = k[i + DEGREE + 1] - k[i + 2];
            let (a, b) = (q(i + 1), q(i));
            let mut out = [0.0; 3];
            if den > 0.0 {
                for c in 0..3 {
                    out[c] = (p - 1.0) * (a[c] - b[c]) / den;
                }
            }
            out
        };
        let (lo, hi) = (k[span], k[span + 1]);
        let w = if hi > lo { (t - lo) / (hi - lo) } else { 0.0 };
        let (r0, r1) = (r(span - 3), r(span - 2));
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (1.0 - w) * r0[c] + w * r1[c];
        }
        out
    }

    fn combine(&self, span: usize, basis: &[f64; DEGREE + 1]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, b) in basis.iter().enumerate() {
            let c = &self.coeffs[span - DEGREE + j];
            for k in 0..3 {
                out[k] += b * c[k];
            }
        }
        out
    }
}

/// Knot span index `k` with `knots[k] <= t < knots[k + 1]`; `t = 1` maps to
/// the last non-empty span.
fn find_span(knots: &[f64], n_ctrl: usize, t: f64) -> usize {
    if t >= knots[n_ctrl] {
        return n_ctrl - 1;
    }
    if t <= knots[DEGREE] {
        return DEGREE;
    }
    let (mut lo, mut hi) = (DEGREE, n_ctrl);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Non-zero cubic basis values on `span` (Cox-de Boor, triangular scheme).
fn basis_functions(knots: &[f64], span: usize, t: f64) -> [f64; DEGREE + 1] {
    let mut n = [0.0; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// First derivatives of the non-zero cubic basis functions on `span`.
fn basis_derivatives(knots: &[f64], span: usize, t: f64) -> [f64; DEGREE + 1] {
    // Quadratic basis on the same span.
    let mut n = [0.0; DEGREE];
    let mut left = [0.0; DEGREE];
    let mut right = [0.0; DEGREE];
    n[0] = 1.0;
    for j in 1..DEGREE {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    // N'_{i,3} = 3 (N_{i,2}/(k[i+3]-k[i]) - N_{i+1,2}/(k[i+4]-k[i+1])).
    // n[r] holds N_{span-2+r, 2}.
    let p = DEGREE as f64;
    let mut d = [0.0; DEGREE + 1];
    for j in 0..=DEGREE {
        let i = span - DEGREE + j;
        let mut v = 0.0;
        if j >= 1 {
            let den = knots[i + DEGREE] - knots[i];
            if den > 0.0 {
                v += n[j - 1] / den;
            }
        }
        if j < DEGREE {
            let den = knots[i + DEGREE + 1] - knots[i + 1];
            if den > 0.0 {
                v -= n[j] / den;
            }
        }
        d[j] = p * v;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(t: f64) -> [f64; 3] {
        [
            1.0 + 2.0 * t - 3.0 * t * t + 0.5 * t * t * t,
            -0.3 * t * t * t + t,
            4.0 - t * t,
        ]
    }

    fn sample_cubic(n: usize) -> (Vec<f64>, Vec<[f64; 3]>) {
        let params: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values = params.iter().map(|&t| cubic(t)).collect();
        (params, values)
    }

    #[test]
    fn partition_of_unity() {
        let knots = CubicBSpline::uniform_knots(5);
        let n_ctrl = knots.len() - 4;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let s = find_span(&knots, n_ctrl, t);
            let b = basis_functions(&knots, s, t);
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let d = basis_derivatives(&knots, s, t);
            assert!(d.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn fit_reproduces_global_cubic() {
        let (params, values) = sample_cubic(24);
        let spline = CubicBSpline::fit(CubicBSpline::uniform_knots(6), &params, &values).unwrap();
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let got = spline.eval(t);
            let want = cubic(t);
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-9, "t={t} axis {k}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (params, values) = sample_cubic(30);
        let spline = CubicBSpline::fit(CubicBSpline::uniform_knots(8), &params, &values).unwrap();
        let h = 1e-6;
        for i in 1..50 {
            let t = i as f64 / 50.0;
            let fd1: Vec<f64> = (0..3)
                .map(|k| (spline.eval(t + h)[k] - spline.eval(t - h)[k]) / (2.0 * h))
                .collect();
            let d1 = spline.derivative(t);
            let fd2: Vec<f64> = (0..3)
                .map(|k| (spline.derivative(t + h)[k] - spline.derivative(t - h)[k]) / (2.0 * h))
                .collect();
            let d2 = spline.second_derivative(t);
            for k in 0..3 {
                assert!((fd1[k] - d1[k]).abs() < 1e-6);
                assert!((fd2[k] - d2[k]).abs() < 1e-5, "t={t} {} vs {}", fd2[k], d2[k]);
            }
        }
    }

    #[test]
    fn second_derivative_continuous_at_interior_knots() {
        // Noisy data so the fit is not globally polynomial.
        let n = 40;
        let params: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values: Vec<[f64; 3]> = params
            .iter()
            .map(|&t| [(7.0 * t).sin(), (3.0 * t).cos() * t, (t * 11.0).sin().abs()])
            .collect();
        let knots = CubicBSpline::uniform_knots(10);
        let spline = CubicBSpline::fit(knots.clone(), &params, &values).unwrap();
        for &k in &knots[4..knots.len() - 4] {
            let below = spline.second_derivative(k - 1e-12);
            let above = spline.second_derivative(k + 1e-12);
            let v0 = spline.eval(k - 1e-12);
            let v1 = spline.eval(k + 1e-12);
            for c in 0..3 {
                assert!((below[c] - above[c]).abs() < 1e-6, "C2 break at {k}");
                assert!((v0[c] - v1[c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn underdetermined_fit_rejected() {
        let (params, values) = sample_cubic(4);
        assert!(matches!(
            CubicBSpline::fit(CubicBSpline::uniform_knots(6), &params, &values),
            Err(TrajectoryError::TooFewPoses { .. })
        ));
    }
}
