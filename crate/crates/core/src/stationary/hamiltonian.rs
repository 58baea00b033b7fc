//! Matrix-free composite Hamiltonian on a box with Dirichlet walls:
//! `−ħ²/2M ∂²_R − ħ²/2m ∂²_x + V_ε(R) + V_S(x) + V_I(x, R)`.
//!
//! Grid edge nodes are the walls; the operator acts as `P L P` with `P`
//! zeroing the edges, so it is symmetric under the trapezoid inner product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField2D;
use crate::grid::Grid2D;
use crate::spec::CompositeSpec;

/// Finite-difference Laplacian along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// `(1, −2, 1)/h²`: the 5-point 2D Laplacian.
    #[default]
    SecondOrder,
    /// `(−1, 16, −30, 16, −1)/12h²` on each axis.
    FourthOrder,
}

impl Stencil {
    fn coefficients(&self) -> &'static [f64] {
        match self {
            Stencil::SecondOrder => &[-2.0, 1.0],
            Stencil::FourthOrder => &[-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian2D {
    pub grid: Grid2D,
    pub env_mass: f64,
    pub sys_mass: f64,
    pub hbar: f64,
    pub stencil: Stencil,
    /// `V_ε + V_S + V_I`, x-fastest.
    pub potential: Vec<f64>,
}

pub fn assemble_tise(spec: &CompositeSpec, grid: Grid2D, stencil: Stencil) -> Result<Hamiltonian2D> {
    spec.validate()?;
    if grid.x.n < 3 || grid.r.n < 3 {
        return Err(Error::Shape("each axis needs at least 3 nodes".into()));
    }
    let xs = grid.x.points();
    let rs = grid.r.points();
    let mut potential = Vec::with_capacity(grid.len());
    for r in &rs {
        for x in &xs {
            potential.push(spec.potential(*x, *r)?);
        }
    }
    Ok(Hamiltonian2D {
        grid,
        env_mass: spec.env_mass,
        sys_mass: spec.sys_mass,
        hbar: spec.hbar,
        stencil,
        potential,
    })
}

impl Hamiltonian2D {
    fn kinetic_scales(&self) -> (f64, f64) {
        let hx = self.grid.x.spacing();
        let hr = self.grid.r.spacing();
        let h2 = self.hbar * self.hbar;
        (-h2 / (2.0 * self.sys_mass * hx * hx), -h2 / (2.0 * self.env_mass * hr * hr))
    }

    pub fn is_interior(&self, ix: usize, ir: usize) -> bool {
        ix > 0 && ir > 0 && ix + 1 < self.grid.x.n && ir + 1 < self.grid.r.n
    }

    /// Number of interior (non-wall) nodes.
    pub fn interior_dim(&self) -> usize {
        (self.grid.x.n - 2) * (self.grid.r.n - 2)
    }

    /// Applies `H` to interior values (x-fastest over interior nodes).
    pub fn apply_interior(&self, v: &[f64], out: &mut [f64]) {
        let nx = self.grid.x.n - 2;
        let nr = self.grid.r.n - 2;
        let (cx, cr) = self.kinetic_scales();
        let coef = self.stencil.coefficients();
        for jr in 0..nr {
            for jx in 0..nx {
                let i = jr * nx + jx;
                let mut acc = (coef[0] * (cx + cr) + self.potential[(jr + 1) * self.grid.x.n + jx + 1]) * v[i];
                for (d, c) in coef.iter().enumerate().skip(1) {
                    if jx >= d {
                        acc += c * cx * v[i - d];
                    }
                    if jx + d < nx {
                        acc += c * cx * v[i + d];
                    }
                    if jr >= d {
                        acc += c * cr * v[i - d * nx];
                    }
                    if jr + d < nr {
                        acc += c * cr * v[i + d * nx];
                    }
                }
                out[i] = acc;
            }
        }
    }

    pub fn to_interior(&self, data: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut re = Vec::with_capacity(self.interior_dim());
        let mut im = Vec::with_capacity(self.interior_dim());
        for ir in 1..self.grid.r.n - 1 {
            for ix in 1..self.grid.x.n - 1 {
                let z = data[self.grid.index(ix, ir)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        (re, im)
    }

    pub fn from_interior(&self, re: &[f64], im: Option<&[f64]>) -> Vec<Complex64> {
        let mut data = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let nx = self.grid.x.n - 2;
        for ir in 1..self.grid.r.n - 1 {
            for ix in 1..self.grid.x.n - 1 {
                let j = (ir - 1) * nx + ix - 1;
                data[self.grid.index(ix, ir)] = Complex64::new(re[j], im.map_or(0.0, |v| v[j]));
            }
        }
        data
    }

    /// `H Ψ` with the walls enforced on input and output.
    pub fn apply(&self, field: &ComplexField2D) -> Result<ComplexField2D> {
        if !field.grid.same_as(&self.grid) {
            return Err(Error::Shape("field grid differs from the Hamiltonian grid".into()));
        }
        let (re, im) = self.to_interior(&field.data);
        let mut hre = vec![0.0; re.len()];
        let mut him = vec![0.0; im.len()];
        self.apply_interior(&re, &mut hre);
        self.apply_interior(&im, &mut him);
        ComplexField2D::new(self.grid, self.from_interior(&hre, Some(&him)))
    }

    /// Gershgorin bound on `‖H‖`.
    pub fn norm_estimate(&self) -> f64 {
        let (cx, cr) = self.kinetic_scales();
        let kin: f64 = self.stencil.coefficients().iter().enumerate().map(|(d, c)| if d == 0 { c.abs() } else { 2.0 * c.abs() }).sum();
        let vmax = self.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        kin * (cx.abs() + cr.abs()) + vmax
    }

    /// `‖(H − E)Ψ‖ / ‖Ψ‖` under the trapezoid norm.
    pub fn residual(&self, field: &ComplexField2D, energy: f64) -> Result<f64> {
        let h = self.apply(field)?;
        let mut diff = h.clone();
        for (d, (hz, z)) in diff.data.iter_mut().zip(h.data.iter().zip(&field.data)) {
            *d = hz - z * energy;
        }
        Ok(diff.norm() / field.norm())
    }
}
