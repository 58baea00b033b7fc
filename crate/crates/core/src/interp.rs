//! One-dimensional interpolants: natural cubic spline, monotone cubic (PCHIP),
//! and the cubic Hermite kernel both are built on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn locate(xs: &[f64], q: f64) -> usize {
    // index i with xs[i] <= q <= xs[i+1], clamped to the valid range
    let i = xs.partition_point(|&x| x <= q);
    i.clamp(1, xs.len() - 1) - 1
}

fn check_nodes(xs: &[f64], ys: &[f64], min_len: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} abscissae vs {} values", xs.len(), ys.len())));
    }
    if xs.len() < min_len {
        return Err(Error::Shape(format!("need at least {min_len} samples, got {}", xs.len())));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("abscissae must be strictly increasing".into()));
    }
    if ys.iter().chain(xs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    Ok(())
}

/// Cubic Hermite basis on `[x0, x1]` with values `y` and slopes `d`.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, q: f64) -> f64 {
    let h = x1 - x0;
    let s = (q - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

/// Natural cubic spline through `(xs, ys)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_nodes(&xs, &ys, 4)?;
        let n = xs.len();
        // Tridiagonal system for interior second derivatives, natural ends.
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        let second = crate::linalg::solve_tridiagonal_real(&sub, &diag, &sup, &rhs)?;
        Ok(CubicSpline { xs, ys, second })
    }

    pub fn min(&self) -> f64 {
        self.xs[0]
    }

    pub fn max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn eval(&self, q: f64) -> f64 {
        let i = locate(&self.xs, q);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - q) / h;
        let b = (q - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, q: f64) -> f64 {
        let i = locate(&self.xs, q);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - q) / h;
        let b = (q - x0) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + (-(3.0 * a * a - 1.0) * self.second[i] + (3.0 * b * b - 1.0) * self.second[i + 1]) * h
                / 6.0
    }
}

/// Monotone piecewise-cubic interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_nodes(&xs, &ys, 2)?;
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b <= 0.0 {
                0.0
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / a + w1 / b)
            };
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    /// Piecewise cubic Hermite with caller-supplied slopes, used when the
    /// derivative of the tabulated function is known exactly.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        check_nodes(&xs, &ys, 2)?;
        if slopes.len() != xs.len() {
            return Err(Error::Shape("one slope per node required".into()));
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn first_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_x(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn eval(&self, q: f64) -> f64 {
        let i = locate(&self.xs, q);
        hermite(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            q,
        )
    }

    pub fn derivative(&self, q: f64) -> f64 {
        let i = locate(&self.xs, q);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let s = (q - x0) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.slopes[i], self.slopes[i + 1]);
        ((6.0 * s * s - 6.0 * s) * (y0 - y1)) / h
            + (3.0 * s * s - 4.0 * s + 1.0) * d0
            + (3.0 * s * s - 2.0 * s) * d1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_sine_midpoint() {
        let n = 41;
        let xs: Vec<f64> = (0..n).map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::new(xs, ys).unwrap();
        for q in [0.3, 1.0, 1.7, 2.9] {
            assert!((s.eval(q) - f64::sin(q)).abs() < 1e-5);
            assert!((s.derivative(q) - f64::cos(q)).abs() < 1e-3);
        }
    }

    #[test]
    fn spline_hits_nodes() {
        let xs = vec![0.0, 1.0, 2.5, 3.0, 4.0];
        let ys = vec![1.0, -1.0, 0.5, 2.0, 0.0];
        let s = CubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys = vec![0.0, 0.1, 0.1, 0.2, 3.0, 3.1, 3.1, 8.0, 8.05, 9.0];
        let m = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = m.eval(0.0);
        for k in 1..=900 {
            let v = m.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }
}
