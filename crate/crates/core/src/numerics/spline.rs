//! Natural cubic spline interpolation with complex values.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplineError {
    #[error("spline needs at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots must be strictly increasing (violated near index {0})")]
    KnotsNotIncreasing(usize),
    #[error("query {query} outside knot range [{lo}, {hi}]")]
    OutOfRange { query: f64, lo: f64, hi: f64 },
}

/// C2 interpolant through `(xs[k], ys[k])` with natural end conditions
/// (vanishing second derivative at both ends).
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<Complex64>,
    y2: Vec<Complex64>,
}

impl CubicSpline {
    pub fn natural(xs: &[f64], ys: &[Complex64]) -> Result<Self, SplineError> {
        let n = xs.len();
        if n < 2 {
            return Err(SplineError::TooFewKnots(n));
        }
        assert_eq!(n, ys.len(), "knot and value counts must match");
        for k in 1..n {
            if xs[k] <= xs[k - 1] {
                return Err(SplineError::KnotsNotIncreasing(k));
            }
        }

        // Thomas solve of the tridiagonal system for the second derivatives.
        let zero = Complex64::new(0.0, 0.0);
        let mut y2 = vec![zero; n];
        let mut u = vec![zero; n];
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = y2[i - 1] * sig + 2.0;
            y2[i] = (sig - 1.0) / p;
            let dy_hi = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            let dy_lo = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = ((dy_hi - dy_lo) * 6.0 / (xs[i + 1] - xs[i - 1]) - u[i - 1] * sig) / p;
        }
        y2[n - 1] = zero;
        for i in (0..n - 1).rev() {
            y2[i] = y2[i] * y2[i + 1] + u[i];
        }

        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            y2,
        })
    }

    /// Spline through real samples (imaginary parts zero).
    pub fn natural_real(xs: &[f64], ys: &[f64]) -> Result<Self, SplineError> {
        let cys: Vec<Complex64> = ys.iter().map(|&y| Complex64::new(y, 0.0)).collect();
        Self::natural(xs, &cys)
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn eval(&self, x: f64) -> Result<Complex64, SplineError> {
        let n = self.xs.len();
        let (lo, hi) = (self.xs[0], self.xs[n - 1]);
        if x < lo || x > hi {
            return Err(SplineError::OutOfRange { query: x, lo, hi });
        }
        // index of the interval [xs[i], xs[i+1]] containing x
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        Ok(self.ys[i] * a
            + self.ys[i + 1] * b
            + (self.y2[i] * (a * a * a - a) + self.y2[i + 1] * (b * b * b - b)) * (h * h / 6.0))
    }

    pub fn eval_real(&self, x: f64) -> Result<f64, SplineError> {
        self.eval(x).map(|v| v.re)
    }
}

/// One-shot natural-spline evaluation.
pub fn cubic_spline_eval(xs: &[f64], ys: &[Complex64], query: f64) -> Result<Complex64, SplineError> {
    CubicSpline::natural(xs, ys)?.eval(query)
}
