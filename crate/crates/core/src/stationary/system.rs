//! The system operator `H_S + V_I(·, R)` on the x grid at a fixed clock
//! reading, with Dirichlet walls at the grid ends.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::grid::Grid1D;
use crate::potential::{Coupling, Potential};

use super::hamiltonian::Stencil;

fn coefficients(stencil: Stencil) -> &'static [f64] {
    match stencil {
        Stencil::SecondOrder => &[-2.0, 1.0],
        Stencil::FourthOrder => &[-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
    }
}

/// `H_S + g(R) h(x)` restricted to the system coordinate.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    pub grid: Grid1D,
    pub mass: f64,
    pub hbar: f64,
    pub stencil: Stencil,
    /// `V_S(x)` on every node.
    pub v_sys: Vec<f64>,
    /// `h(x)` on every node; the interaction is `g(R) h(x)`.
    pub h_x: Vec<f64>,
}

impl SystemOperator {
    pub fn new(v_sys: &Potential, coupling: &Coupling, mass: f64, hbar: f64, grid: Grid1D, stencil: Stencil) -> Result<Self> {
        let xs = grid.points();
        Ok(SystemOperator {
            grid,
            mass,
            hbar,
            stencil,
            v_sys: xs.iter().map(|x| v_sys.eval(*x)).collect::<Result<_>>()?,
            h_x: xs.iter().map(|x| coupling.x_factor(*x)).collect::<Result<_>>()?,
        })
    }

    fn kinetic_scale(&self) -> f64 {
        let h = self.grid.spacing();
        -self.hbar * self.hbar / (2.0 * self.mass * h * h)
    }

    /// Applies `H_S + g V` with `g = g(R)`; wall nodes are held at zero.
    pub fn apply(&self, g: f64, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n;
        let c = self.kinetic_scale();
        let coef = coefficients(self.stencil);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let val = |i: isize| -> Complex64 {
            if i <= 0 || i >= n as isize - 1 {
                Complex64::new(0.0, 0.0)
            } else {
                f[i as usize]
            }
        };
        for i in 1..n - 1 {
            let mut acc = val(i as isize) * (coef[0] * c + self.v_sys[i] + g * self.h_x[i]);
            for (d, k) in coef.iter().enumerate().skip(1) {
                acc += (val(i as isize - d as isize) + val(i as isize + d as isize)) * (k * c);
            }
            out[i] = acc;
        }
        out
    }

    /// Dense symmetric matrix over interior nodes.
    pub fn matrix(&self, g: f64) -> DMatrix<f64> {
        let m = self.grid.n - 2;
        let c = self.kinetic_scale();
        let coef = coefficients(self.stencil);
        DMatrix::from_fn(m, m, |i, j| {
            let d = i.abs_diff(j);
            let mut v = if d < coef.len() { coef[d] * c } else { 0.0 };
            if d == 0 {
                v += self.v_sys[i + 1] + g * self.h_x[i + 1];
            }
            v
        })
    }
}
