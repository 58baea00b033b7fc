//! Uniform grids for the system coordinate `x` and the environment coordinate `R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid on `[min, max]` with `n` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        let grid = Grid1D { min, max, n };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Shape(format!("grid needs at least 3 points, got {}", self.n)));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max <= self.min {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        // Pin the last node so that `point(n - 1) == max` exactly.
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.min && q <= self.max
    }

    /// Same grid with spacing halved (2n - 1 points).
    pub fn refined(&self) -> Self {
        Grid1D {
            min: self.min,
            max: self.max,
            n: 2 * self.n - 1,
        }
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && (self.min - other.min).abs() <= 1e-12 * (1.0 + self.min.abs())
            && (self.max - other.max).abs() <= 1e-12 * (1.0 + self.max.abs())
    }
}

/// Tensor grid over `(x, R)`. Samples are stored row-major with `x` fastest:
/// index `ir * x.n + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2D {
    pub x: Grid1D,
    pub r: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, r: Grid1D) -> Result<Self> {
        x.validate()?;
        r.validate()?;
        Ok(Grid2D { x, r })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x.n * self.r.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, ir: usize) -> usize {
        ir * self.x.n + ix
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        self.x.same_as(&other.x) && self.r.same_as(&other.r)
    }
}
