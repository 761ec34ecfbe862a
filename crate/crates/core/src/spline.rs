//! Cubic spline interpolation with not-a-knot end conditions.

use crate::error::{Error, Result};

/// Piecewise cubic interpolant stored in local Hermite-expanded form:
/// on `[x_i, x_{i+1}]`, `y(x) = c0 + c1 d + c2 d^2 + c3 d^3` with `d = x - x_i`.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
    y_last: f64,
}

impl CubicSpline {
    /// Builds a not-a-knot spline through `(x_i, y_i)`; `x` must be strictly
    /// increasing. Two points give the secant line and three points the
    /// interpolating parabola.
    pub fn not_a_knot(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::Precondition(format!(
                "spline abscissae ({n}) and ordinates ({}) differ in length",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::Precondition("spline needs at least two points".into()));
        }
        if let Some(w) = x.windows(2).find(|w| w[1] <= w[0] || !w[1].is_finite()) {
            return Err(Error::Precondition(format!(
                "spline abscissae not strictly increasing near {}",
                w[0]
            )));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let slopes = match n {
            2 => vec![delta[0], delta[0]],
            3 => {
                let curv = (delta[1] - delta[0]) / (x[2] - x[0]);
                x.iter()
                    .map(|&xi| delta[0] + curv * (2.0 * xi - x[0] - x[1]))
                    .collect()
            }
            _ => not_a_knot_slopes(x, &h, &delta),
        };

        let coeffs = (0..n - 1)
            .map(|i| {
                let (s0, s1) = (slopes[i], slopes[i + 1]);
                let hi = h[i];
                [
                    y[i],
                    s0,
                    (3.0 * delta[i] - 2.0 * s0 - s1) / hi,
                    (s0 + s1 - 2.0 * delta[i]) / (hi * hi),
                ]
            })
            .collect();
        Ok(Self {
            x: x.to_vec(),
            coeffs,
            y_last: y[n - 1],
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Local coefficients `[c0, c1, c2, c3]` of every interval, left to right.
    pub fn coefficients(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    pub fn start(&self) -> f64 {
        self.x[0]
    }

    pub fn end(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    #[inline]
    fn segment(&self, xv: f64) -> usize {
        let last = self.coeffs.len() - 1;
        // partition_point gives the first knot strictly greater than xv.
        self.x.partition_point(|&k| k <= xv).saturating_sub(1).min(last)
    }

    /// Value at `xv`; outside the knot range the end cubic is continued.
    #[inline]
    pub fn eval(&self, xv: f64) -> f64 {
        let n = self.x.len();
        if xv == self.x[n - 1] {
            return self.y_last;
        }
        let i = self.segment(xv);
        let d = xv - self.x[i];
        let [c0, c1, c2, c3] = self.coeffs[i];
        c0 + d * (c1 + d * (c2 + d * c3))
    }

    #[inline]
    pub fn derivative(&self, xv: f64) -> f64 {
        let i = self.segment(xv);
        let d = xv - self.x[i];
        let [_, c1, c2, c3] = self.coeffs[i];
        c1 + d * (2.0 * c2 + 3.0 * d * c3)
    }

    pub fn second_derivative(&self, xv: f64) -> f64 {
        let i = self.segment(xv);
        let d = xv - self.x[i];
        let [_, _, c2, c3] = self.coeffs[i];
        2.0 * c2 + 6.0 * d * c3
    }

    /// Knot count.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Slopes at the knots from the tridiagonal system with not-a-knot rows
/// (third derivative continuous across the second and penultimate knots).
fn not_a_knot_slopes(x: &[f64], h: &[f64], delta: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let d0 = x[2] - x[0];
    diag[0] = h[1];
    upper[0] = d0;
    rhs[0] = ((h[0] + 2.0 * d0) * h[1] * delta[0] + h[0] * h[0] * delta[1]) / d0;

    for i in 1..n - 1 {
        lower[i] = h[i];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i - 1];
        rhs[i] = 3.0 * (h[i] * delta[i - 1] + h[i - 1] * delta[i]);
    }

    let dn = x[n - 1] - x[n - 3];
    lower[n - 1] = dn;
    diag[n - 1] = h[n - 3];
    rhs[n - 1] = (h[n - 2] * h[n - 2] * delta[n - 3] + (2.0 * dn + h[n - 2]) * h[n - 3] * delta[n - 2]) / dn;

    solve_tridiagonal(&lower, &mut diag, &upper, &mut rhs);
    rhs
}

/// Thomas algorithm; overwrites `diag` and returns the solution in `rhs`.
fn solve_tridiagonal(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let x: Vec<f64> = (0..9).map(|i| (i as f64).powf(1.3) * 0.2).collect();
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.25 * t * t * t;
        let dp = |t: f64| -2.0 + t - 0.75 * t * t;
        let y: Vec<f64> = x.iter().map(|&t| p(t)).collect();
        let s = CubicSpline::not_a_knot(&x, &y).unwrap();
        for k in 0..200 {
            let t = x[0] + (x[8] - x[0]) * k as f64 / 199.0;
            assert!((s.eval(t) - p(t)).abs() < 1e-12, "t = {t}");
            assert!((s.derivative(t) - dp(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn small_point_counts() {
        let s = CubicSpline::not_a_knot(&[0.0, 2.0], &[1.0, 5.0]).unwrap();
        assert_eq!(s.eval(1.0), 3.0);
        let s = CubicSpline::not_a_knot(&[0.0, 1.0, 3.0], &[0.0, 1.0, 9.0]).unwrap();
        assert!((s.eval(2.0) - 4.0).abs() < 1e-14);
        assert!((s.derivative(2.0) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(CubicSpline::not_a_knot(&[0.0, 1.0, 1.0, 2.0], &[0.0; 4]).is_err());
        assert!(CubicSpline::not_a_knot(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn fourth_order_convergence_on_sine() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 3.0 * i as f64 / (n - 1) as f64).collect();
            let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
            let s = CubicSpline::not_a_knot(&x, &y).unwrap();
            (0..1000)
                .map(|k| {
                    let t = 3.0 * k as f64 / 999.0;
                    (s.eval(t) - t.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn interpolates_its_data(ys in proptest::collection::vec(-10.0f64..10.0, 4..30)) {
            let x: Vec<f64> = (0..ys.len()).map(|i| i as f64 * 0.37 + (i as f64).sqrt()).collect();
            let s = CubicSpline::not_a_knot(&x, &ys).unwrap();
            for (xi, yi) in x.iter().zip(&ys) {
                prop_assert!((s.eval(*xi) - yi).abs() < 1e-9 * (1.0 + yi.abs()));
            }
        }
    }
}
