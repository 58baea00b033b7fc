//! Channel expansions `Ψ(x, R) = Σ_n κ_n(R) φ_n(x)`: system bases, BO
//! states, projections and the close-coupled equations in R.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField1D, ComplexField2D};
use crate::grid::Grid1D;
use crate::linalg::symmetric_eigen;
use crate::potential::Coupling;
use crate::spec::CompositeSpec;

use super::hamiltonian::Stencil;
use super::system::SystemOperator;

/// Bound on `|⟨φ_m|φ_n⟩ − δ_mn|` for a usable basis.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChannelEnergies {
    /// `ε_n`, one per state.
    Fixed(Vec<f64>),
    /// `U_n^BO(R)` rows indexed by R.
    BornOppenheimer { r: Vec<f64>, table: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBasis {
    pub x_grid: Grid1D,
    pub states: Vec<ComplexField1D>,
    pub energies: ChannelEnergies,
}

fn x_dot(a: &[Complex64], b: &[Complex64], w: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(w).map(|((p, q), wi)| p.conj() * q * *wi).sum()
}

impl ChannelBasis {
    pub fn new(x_grid: Grid1D, states: Vec<ComplexField1D>, energies: ChannelEnergies) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("a channel basis needs at least one state".into()));
        }
        if states.iter().any(|s| !s.grid.same_as(&x_grid)) {
            return Err(Error::Shape("basis states must share the x grid".into()));
        }
        let basis = ChannelBasis { x_grid, states, energies };
        let err = basis.orthonormality_error();
        if err > ORTHONORMALITY_TOL {
            return Err(Error::Degenerate(format!("basis is not orthonormal (defect {err:e})")));
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `max |⟨φ_m|φ_n⟩ − δ_mn|`.
    pub fn orthonormality_error(&self) -> f64 {
        let w = self.x_grid.weights();
        let mut err: f64 = 0.0;
        for (m, a) in self.states.iter().enumerate() {
            for (n, b) in self.states.iter().enumerate() {
                let d = if m == n { 1.0 } else { 0.0 };
                err = err.max((x_dot(&a.data, &b.data, &w) - d).norm());
            }
        }
        err
    }

    /// The first `k` channels.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidParameter(format!("cannot keep {k} of {} channels", self.len())));
        }
        let energies = match &self.energies {
            ChannelEnergies::Fixed(e) => ChannelEnergies::Fixed(e[..k].to_vec()),
            ChannelEnergies::BornOppenheimer { r, table } => ChannelEnergies::BornOppenheimer {
                r: r.clone(),
                table: table.iter().map(|row| row[..k].to_vec()).collect(),
            },
        };
        Ok(ChannelBasis {
            x_grid: self.x_grid,
            states: self.states[..k].to_vec(),
            energies,
        })
    }
}

/// Real eigenvector on interior nodes to a trapezoid-normalized field,
/// positive at its largest component.
fn interior_to_state(grid: Grid1D, column: &[f64]) -> ComplexField1D {
    let scale = 1.0 / grid.spacing().sqrt();
    let imax = column
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
        .0;
    let sign = if column[imax] < 0.0 { -scale } else { scale };
    let mut data = vec![Complex64::new(0.0, 0.0); grid.n];
    for (i, v) in column.iter().enumerate() {
        data[i + 1] = Complex64::new(sign * v, 0.0);
    }
    ComplexField1D { grid, data }
}

fn lowest_states(op: &SystemOperator, g: f64, k: usize) -> Result<(Vec<f64>, Vec<ComplexField1D>)> {
    let dim = op.grid.n - 2;
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!("requested {k} states from a {dim}-node interior")));
    }
    let (vals, vecs) = symmetric_eigen(op.matrix(g));
    let states = (0..k)
        .map(|j| interior_to_state(op.grid, vecs.column(j).as_slice()))
        .collect();
    Ok((vals[..k].to_vec(), states))
}

/// The `k` lowest eigenstates of `H_S` (plus `V_I` at `r_ref` when given).
pub fn system_eigenbasis(spec: &CompositeSpec, x_grid: Grid1D, k: usize, stencil: Stencil, r_ref: Option<f64>) -> Result<ChannelBasis> {
    let op = SystemOperator::new(&spec.v_sys, &spec.v_int, spec.sys_mass, spec.hbar, x_grid, stencil)?;
    let g = match r_ref {
        Some(r) => spec.v_int.r_factor(r)?,
        None => 0.0,
    };
    let (energies, states) = lowest_states(&op, g, k)?;
    ChannelBasis::new(x_grid, states, ChannelEnergies::Fixed(energies))
}

/// BO eigenpairs `(H_S + V_I(·, R)) φ_n = U_n^BO(R) φ_n` at one R.
pub fn solve_bo_states(spec: &CompositeSpec, x_grid: Grid1D, r: f64, k: usize, stencil: Stencil) -> Result<(Vec<f64>, Vec<ComplexField1D>)> {
    let op = SystemOperator::new(&spec.v_sys, &spec.v_int, spec.sys_mass, spec.hbar, x_grid, stencil)?;
    lowest_states(&op, spec.v_int.r_factor(r)?, k)
}

/// BO states along a sequence of R values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoSweep {
    pub r: Vec<f64>,
    pub energies: Vec<Vec<f64>>,
    pub states: Vec<Vec<ComplexField1D>>,
}

impl BoSweep {
    /// The BO states at the `i`-th R value as a basis.
    pub fn basis_at(&self, i: usize) -> Result<ChannelBasis> {
        let x_grid = self.states[i][0].grid;
        ChannelBasis::new(
            x_grid,
            self.states[i].clone(),
            ChannelEnergies::BornOppenheimer {
                r: vec![self.r[i]],
                table: vec![self.energies[i].clone()],
            },
        )
    }

    /// `⟨φ_n(R_i)|φ_n(R_{i+1})⟩` for every neighbouring pair.
    pub fn neighbour_overlaps(&self, n: usize) -> Vec<f64> {
        let w = self.states[0][0].grid.weights();
        self.states
            .windows(2)
            .map(|p| x_dot(&p[0][n].data, &p[1][n].data, &w).re)
            .collect()
    }
}

/// Solves the BO problem at each R in parallel, then flips signs so that
/// each state overlaps positively with its predecessor in R.
pub fn bo_sweep(spec: &CompositeSpec, x_grid: Grid1D, r: &[f64], k: usize, stencil: Stencil) -> Result<BoSweep> {
    let solved: Vec<(Vec<f64>, Vec<ComplexField1D>)> = r
        .par_iter()
        .map(|&ri| solve_bo_states(spec, x_grid, ri, k, stencil))
        .collect::<Result<_>>()?;
    let w = x_grid.weights();
    let mut energies = Vec::with_capacity(r.len());
    let mut states: Vec<Vec<ComplexField1D>> = Vec::with_capacity(r.len());
    for (e, mut s) in solved {
        if let Some(prev) = states.last() {
            for (n, st) in s.iter_mut().enumerate() {
                if x_dot(&prev[n].data, &st.data, &w).re < 0.0 {
                    *st = st.scaled(Complex64::new(-1.0, 0.0));
                }
            }
        }
        energies.push(e);
        states.push(s);
    }
    Ok(BoSweep {
        r: r.to_vec(),
        energies,
        states,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDecomposition {
    pub basis: ChannelBasis,
    pub kappa: Vec<ComplexField1D>,
    /// `1 − Σ‖κ_n‖²/‖Ψ‖²`.
    pub defect: f64,
}

impl ChannelDecomposition {
    pub fn r_grid(&self) -> Grid1D {
        self.kappa[0].grid
    }

    pub fn norms_sqr(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| k.norm_sqr()).collect()
    }
}

/// `κ_n(R) = ⟨φ_n|Ψ(·, R)⟩`.
pub fn channel_project(full: &ComplexField2D, basis: &ChannelBasis) -> Result<ChannelDecomposition> {
    if !full.grid.x.same_as(&basis.x_grid) {
        return Err(Error::Shape("Ψ and the basis use different x grids".into()));
    }
    let w = basis.x_grid.weights();
    let rg = full.grid.r;
    let kappa: Vec<ComplexField1D> = basis
        .states
        .par_iter()
        .map(|phi| ComplexField1D {
            grid: rg,
            data: (0..rg.n).map(|ir| x_dot(&phi.data, full.slice_at_r(ir), &w)).collect(),
        })
        .collect();
    let total = full.norm().powi(2);
    let kept: f64 = kappa.iter().map(|k| k.norm_sqr()).sum();
    Ok(ChannelDecomposition {
        basis: basis.clone(),
        kappa,
        defect: 1.0 - kept / total,
    })
}

/// `V^eff_mn(R) = ⟨φ_m|H_S + V_I(·, R)|φ_n⟩`, split as `A + g(R) B`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCoupling {
    pub h_s: DMatrix<Complex64>,
    pub h_x: DMatrix<Complex64>,
    pub coupling: Coupling,
}

impl EffectiveCoupling {
    pub fn new(basis: &ChannelBasis, spec: &CompositeSpec, stencil: Stencil) -> Result<Self> {
        let op = SystemOperator::new(&spec.v_sys, &spec.v_int, spec.sys_mass, spec.hbar, basis.x_grid, stencil)?;
        let w = basis.x_grid.weights();
        let k = basis.len();
        let applied: Vec<Vec<Complex64>> = basis.states.iter().map(|s| op.apply(0.0, &s.data)).collect();
        let hx_applied: Vec<Vec<Complex64>> = basis
            .states
            .iter()
            .map(|s| s.data.iter().zip(&op.h_x).map(|(z, h)| z * *h).collect())
            .collect();
        let h_s = DMatrix::from_fn(k, k, |m, n| x_dot(&basis.states[m].data, &applied[n], &w));
        let h_x = DMatrix::from_fn(k, k, |m, n| x_dot(&basis.states[m].data, &hx_applied[n], &w));
        Ok(EffectiveCoupling {
            h_s,
            h_x,
            coupling: spec.v_int.clone(),
        })
    }

    pub fn at(&self, r: f64) -> Result<DMatrix<Complex64>> {
        let g = self.coupling.r_factor(r)?;
        Ok(&self.h_s + &self.h_x * Complex64::new(g, 0.0))
    }
}

/// `max |V − V†| / max(|V|, tiny)`.
pub fn hermiticity_defect(v: &DMatrix<Complex64>) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
    let mut d: f64 = 0.0;
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            d = d.max((v[(i, j)] - v[(j, i)].conj()).norm());
        }
    }
    d / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloseCoupledResidual {
    /// `‖[H_ε − E]κ_m + Σ_n V^eff_mn κ_n‖` per channel.
    pub per_channel: Vec<f64>,
    /// Largest per-channel residual.
    pub aggregate: f64,
    /// Largest relative Hermiticity defect of `V^eff(R)` over the R grid.
    pub hermiticity: f64,
}

pub fn close_coupled_residual(
    decomp: &ChannelDecomposition,
    spec: &CompositeSpec,
    energy: f64,
    stencil: Stencil,
) -> Result<CloseCoupledResidual> {
    let rg = decomp.r_grid();
    let env = SystemOperator::new(&spec.v_env, &Coupling::Zero, spec.env_mass, spec.hbar, rg, stencil)?;
    let veff = EffectiveCoupling::new(&decomp.basis, spec, stencil)?;
    let rs = rg.points();
    let mats: Vec<DMatrix<Complex64>> = rs.iter().map(|r| veff.at(*r)).collect::<Result<_>>()?;
    let hermiticity = mats.iter().map(hermiticity_defect).fold(0.0, f64::max);
    let k = decomp.kappa.len();
    let per_channel: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|m| {
            let mut lhs = env.apply(0.0, &decomp.kappa[m].data);
            for ir in 1..rg.n - 1 {
                lhs[ir] -= decomp.kappa[m].data[ir] * energy;
                for n in 0..k {
                    lhs[ir] += mats[ir][(m, n)] * decomp.kappa[n].data[ir];
                }
            }
            ComplexField1D { grid: rg, data: lhs }.norm()
        })
        .collect();
    let aggregate = per_channel.iter().cloned().fold(0.0, f64::max);
    Ok(CloseCoupledResidual {
        per_channel,
        aggregate,
        hermiticity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::potential::Potential;

    fn spec(lambda: f64) -> CompositeSpec {
        CompositeSpec {
            env_mass: 1.0,
            sys_mass: 1.0,
            hbar: 1.0,
            energy: 1.0,
            clock_energy: None,
            v_env: Potential::harmonic(1.0),
            v_sys: Potential::harmonic(1.0),
            v_int: Coupling::Bilinear { lambda },
        }
    }

    #[test]
    fn eigenbasis_is_orthonormal() {
        let b = system_eigenbasis(&spec(0.0), Grid1D::new(-8.0, 8.0, 161).unwrap(), 6, Stencil::FourthOrder, None).unwrap();
        assert!(b.orthonormality_error() < 1e-10);
        if let ChannelEnergies::Fixed(e) = &b.energies {
            for (n, en) in e.iter().enumerate() {
                assert!((en - (n as f64 + 0.5)).abs() < 1e-3, "{n} {en}");
            }
        }
    }

    #[test]
    fn bo_ground_energy_completes_the_square() {
        let lambda = 0.3;
        let g = Grid1D::new(-10.0, 10.0, 401).unwrap();
        for r in [-2.0, 0.0, 1.5] {
            let (e, _) = solve_bo_states(&spec(lambda), g, r, 1, Stencil::FourthOrder).unwrap();
            let exact = 0.5 - lambda * lambda * r * r / 2.0;
            assert!(((e[0] - exact) / exact).abs() < 1e-6, "{r}: {} vs {exact}", e[0]);
        }
    }

    #[test]
    fn bo_sweep_is_continuous() {
        let g = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let r: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
        let sweep = bo_sweep(&spec(0.4), g, &r, 3, Stencil::SecondOrder).unwrap();
        for n in 0..3 {
            for o in sweep.neighbour_overlaps(n) {
                assert!(o > 0.98, "{n} {o}");
            }
        }
        let uncoupled = bo_sweep(&spec(0.0), g, &r, 2, Stencil::SecondOrder).unwrap();
        for s in &uncoupled.states {
            assert!((s[1].data[40] - uncoupled.states[0][1].data[40]).norm() < 1e-12);
        }
    }

    #[test]
    fn product_state_projects_onto_one_channel() {
        let xg = Grid1D::new(-6.0, 6.0, 61).unwrap();
        let rg = Grid1D::new(-5.0, 5.0, 41).unwrap();
        let basis = system_eigenbasis(&spec(0.0), xg, 4, Stencil::SecondOrder, None).unwrap();
        let g = Grid2D::new(xg, rg).unwrap();
        let full = ComplexField2D::from_fn(g, |x, r| {
            let ix = ((x - xg.min) / xg.spacing()).round() as usize;
            basis.states[0].data[ix] * (-0.5 * r * r).exp()
        });
        let d = channel_project(&full, &basis).unwrap();
        for ir in 0..rg.n {
            assert!((d.kappa[0].data[ir].re - (-0.5 * rg.point(ir).powi(2)).exp()).abs() < 1e-10);
            for n in 1..4 {
                assert!(d.kappa[n].data[ir].norm() < 1e-10);
            }
        }
        assert!(d.defect.abs() < 1e-10);
    }

    #[test]
    fn effective_coupling_is_hermitian() {
        let basis = system_eigenbasis(&spec(0.2), Grid1D::new(-6.0, 6.0, 81).unwrap(), 8, Stencil::FourthOrder, Some(0.5)).unwrap();
        let v = EffectiveCoupling::new(&basis, &spec(0.2), Stencil::FourthOrder).unwrap();
        for r in [-3.0, 0.0, 2.5] {
            assert!(hermiticity_defect(&v.at(r).unwrap()) < 1e-10);
        }
    }
}
