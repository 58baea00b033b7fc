//! Sampled complex fields on uniform grids, trapezoid inner products and
//! second-order finite-difference stencils.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Grid2D};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_finite(data: &[Complex64]) -> Result<()> {
    if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidParameter("field contains non-finite samples".into()));
    }
    Ok(())
}

/// Second derivative of uniformly spaced samples: central three-point stencil in
/// the interior, one-sided second-order stencils at the two edges.
pub fn second_derivative_samples(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    let inv = 1.0 / (h * h);
    let mut out = vec![ZERO; n];
    for i in 1..n - 1 {
        out[i] = (f[i - 1] - f[i] * 2.0 + f[i + 1]) * inv;
    }
    if n == 3 {
        out[0] = out[1];
        out[2] = out[1];
    } else {
        out[0] = (f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3]) * inv;
        out[n - 1] = (f[n - 1] * 2.0 - f[n - 2] * 5.0 + f[n - 3] * 4.0 - f[n - 4]) * inv;
    }
    out
}

/// First derivative: central interior, one-sided second-order edges.
pub fn first_derivative_samples(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    let inv = 0.5 / h;
    let mut out = vec![ZERO; n];
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv;
    }
    out[0] = (f[0] * -3.0 + f[1] * 4.0 - f[2]) * inv;
    out[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * inv;
    out
}

/// Real-valued convenience wrapper around [`first_derivative_samples`].
pub fn first_derivative_real(f: &[f64], h: f64) -> Vec<f64> {
    let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    first_derivative_samples(&c, h).into_iter().map(|z| z.re).collect()
}

/// Real-valued convenience wrapper around [`second_derivative_samples`].
pub fn second_derivative_real(f: &[f64], h: f64) -> Vec<f64> {
    let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    second_derivative_samples(&c, h).into_iter().map(|z| z.re).collect()
}

/// Trapezoid `∫ conj(a) b` over uniformly spaced samples.
pub fn trapezoid_dot(a: &[Complex64], b: &[Complex64], h: f64) -> Complex64 {
    let n = a.len();
    let mut acc = ZERO;
    for i in 1..n - 1 {
        acc += a[i].conj() * b[i];
    }
    acc += (a[0].conj() * b[0] + a[n - 1].conj() * b[n - 1]) * 0.5;
    acc * h
}

/// Samples of a complex function on a 1D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField1D {
    pub grid: Grid1D,
    pub data: Vec<Complex64>,
}

impl ComplexField1D {
    pub fn new(grid: Grid1D, data: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if data.len() != grid.n {
            return Err(Error::Shape(format!("{} samples on a {}-point grid", data.len(), grid.n)));
        }
        check_finite(&data)?;
        Ok(ComplexField1D { grid, data })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let data = grid.points().into_iter().map(f).collect();
        ComplexField1D { grid, data }
    }

    pub fn from_real(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |q| Complex64::new(f(q), 0.0))
    }

    pub fn zeros(grid: Grid1D) -> Self {
        ComplexField1D {
            grid,
            data: vec![ZERO; grid.n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        trapezoid_dot(&self.data, &self.data, self.grid.spacing()).re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        ComplexField1D {
            grid: self.grid,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Trapezoid-rule `∫ a* b dx`.
pub fn inner_product(a: &ComplexField1D, b: &ComplexField1D) -> Result<Complex64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::Shape("inner product of fields on different grids".into()));
    }
    Ok(trapezoid_dot(&a.data, &b.data, a.grid.spacing()))
}

/// Central three-point interior, one-sided second-order edges.
pub fn second_derivative(f: &ComplexField1D) -> ComplexField1D {
    ComplexField1D {
        grid: f.grid,
        data: second_derivative_samples(&f.data, f.grid.spacing()),
    }
}

pub fn first_derivative(f: &ComplexField1D) -> ComplexField1D {
    ComplexField1D {
        grid: f.grid,
        data: first_derivative_samples(&f.data, f.grid.spacing()),
    }
}

/// Scale to unit trapezoid norm.
pub fn normalize(f: &ComplexField1D) -> Result<ComplexField1D> {
    let n = f.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero field".into()));
    }
    Ok(f.scaled(Complex64::new(1.0 / n, 0.0)))
}

/// Samples of a complex function of `(x, R)`, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub grid: Grid2D,
    pub data: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn new(grid: Grid2D, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples on a {}x{} grid",
                data.len(),
                grid.x.n,
                grid.r.n
            )));
        }
        check_finite(&data)?;
        Ok(ComplexField2D { grid, data })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xs = grid.x.points();
        let rs = grid.r.points();
        let mut data = Vec::with_capacity(grid.len());
        for &r in &rs {
            for &x in &xs {
                data.push(f(x, r));
            }
        }
        ComplexField2D { grid, data }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        ComplexField2D {
            grid,
            data: vec![ZERO; grid.len()],
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, ir: usize) -> Complex64 {
        self.data[self.grid.index(ix, ir)]
    }

    /// The x-slice at fixed `R` index.
    pub fn slice_at_r(&self, ir: usize) -> &[Complex64] {
        let nx = self.grid.x.n;
        &self.data[ir * nx..(ir + 1) * nx]
    }

    pub fn slice_field(&self, ir: usize) -> ComplexField1D {
        ComplexField1D {
            grid: self.grid.x,
            data: self.slice_at_r(ir).to_vec(),
        }
    }

    /// The R-line at fixed x index.
    pub fn line_at_x(&self, ix: usize) -> Vec<Complex64> {
        (0..self.grid.r.n).map(|ir| self.at(ix, ir)).collect()
    }

    pub fn dot(&self, other: &ComplexField2D) -> Result<Complex64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Shape("inner product of fields on different grids".into()));
        }
        let wx = self.grid.x.weights();
        let wr = self.grid.r.weights();
        let nx = self.grid.x.n;
        let mut acc = ZERO;
        for (ir, w_r) in wr.iter().enumerate() {
            let mut row = ZERO;
            for (ix, w_x) in wx.iter().enumerate() {
                let k = ir * nx + ix;
                row += self.data[k].conj() * other.data[k] * *w_x;
            }
            acc += row * *w_r;
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        ComplexField2D {
            grid: self.grid,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest amplitude on the outer frame of the grid.
    pub fn boundary_amplitude(&self) -> f64 {
        let (nx, nr) = (self.grid.x.n, self.grid.r.n);
        let mut m: f64 = 0.0;
        for ir in 0..nr {
            m = m.max(self.at(0, ir).norm()).max(self.at(nx - 1, ir).norm());
        }
        for ix in 0..nx {
            m = m.max(self.at(ix, 0).norm()).max(self.at(ix, nr - 1).norm());
        }
        m
    }
}

pub fn normalize_2d(f: &ComplexField2D) -> Result<ComplexField2D> {
    let n = f.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero field".into()));
    }
    Ok(f.scaled(Complex64::new(1.0 / n, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid1D) -> ComplexField1D {
        ComplexField1D::from_real(grid, |q| (-q * q / 2.0).exp() / PI.powf(0.25))
    }

    #[test]
    fn gaussian_is_normalized() {
        let g = Grid1D::new(-10.0, 10.0, 801).unwrap();
        let f = gaussian(g);
        assert!((inner_product(&f, &f).unwrap().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn even_and_odd_are_orthogonal() {
        let g = Grid1D::new(-5.0, 5.0, 201).unwrap();
        let even = gaussian(g);
        let odd = ComplexField1D::from_real(g, |q| q * (-q * q / 2.0).exp());
        assert!(inner_product(&even, &odd).unwrap().norm() < 1e-10);
    }

    #[test]
    fn sines_are_orthogonal() {
        let g = Grid1D::new(0.0, PI, 2001).unwrap();
        let a = ComplexField1D::from_real(g, f64::sin);
        let b = ComplexField1D::from_real(g, |q| (2.0 * q).sin());
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-8);
    }

    #[test]
    fn grid_mismatch_is_shape_error() {
        let a = ComplexField1D::zeros(Grid1D::new(0.0, 1.0, 10).unwrap());
        let b = ComplexField1D::zeros(Grid1D::new(0.0, 1.0, 11).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn quadrature_is_second_order() {
        // ∫ cos² on [0, 1] has no endpoint-derivative cancellation.
        let exact = 0.5 + (2.0f64).sin() / 4.0;
        let err = |n: usize| {
            let g = Grid1D::new(0.0, 1.0, n).unwrap();
            let f = ComplexField1D::from_real(g, f64::cos);
            (f.norm_sqr() - exact).abs()
        };
        let ratio = err(21) / err(41);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn second_derivative_exact_on_quadratics() {
        let g = Grid1D::new(-2.0, 3.0, 17).unwrap();
        let f = ComplexField1D::from_real(g, |q| q * q);
        for z in second_derivative(&f).data {
            assert!((z.re - 2.0).abs() < 1e-9);
        }
        let c = ComplexField1D::from_real(g, |_| 4.2);
        assert!(second_derivative(&c).data.iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn second_derivative_richardson() {
        let err = |n: usize| {
            let g = Grid1D::new(0.0, 3.0, n).unwrap();
            let f = ComplexField1D::from_real(g, f64::sin);
            let d = second_derivative(&f);
            // interior nodes; the edge stencil is exercised by the quadratic test
            g.points()
                .iter()
                .zip(&d.data)
                .skip(1)
                .take(n - 2)
                .map(|(q, z)| (z.re + q.sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(31) / err(61);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn normalize_contracts() {
        let g = Grid1D::new(-10.0, 10.0, 801).unwrap();
        let unit = gaussian(g);
        let twice = unit.scaled(Complex64::new(2.0, 0.0));
        let back = normalize(&twice).unwrap();
        for (a, b) in back.data.iter().zip(&unit.data) {
            assert!((a - b).norm() < 1e-8);
        }
        let once = normalize(&unit).unwrap();
        let again = normalize(&once).unwrap();
        for (a, b) in once.data.iter().zip(&again.data) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(matches!(normalize(&ComplexField1D::zeros(g)), Err(Error::Degenerate(_))));
    }

    proptest! {
        #[test]
        fn inner_product_is_conjugate_symmetric(
            re in proptest::collection::vec(-5.0f64..5.0, 12),
            im in proptest::collection::vec(-5.0f64..5.0, 12),
        ) {
            let g = Grid1D::new(0.0, 1.0, 6).unwrap();
            let a = ComplexField1D::new(g, (0..6).map(|i| Complex64::new(re[i], im[i])).collect()).unwrap();
            let b = ComplexField1D::new(g, (6..12).map(|i| Complex64::new(re[i], im[i])).collect()).unwrap();
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
        }

        #[test]
        fn normalized_random_fields_have_unit_norm(
            re in proptest::collection::vec(-5.0f64..5.0, 9),
            im in proptest::collection::vec(-5.0f64..5.0, 9),
        ) {
            let g = Grid1D::new(-1.0, 2.0, 9).unwrap();
            let f = ComplexField1D::new(g, re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect()).unwrap();
            prop_assume!(f.norm() > 1e-6);
            let n = normalize(&f).unwrap();
            prop_assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }
}
