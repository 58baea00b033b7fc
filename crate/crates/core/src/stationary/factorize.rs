//! Exact single-product factorization `Ψ(x, R) = χ(R) ψ(x, R)` with the
//! back-reaction `U_S(R)` on the environment.
//!
//! `U_S` is evaluated literally as
//! `(ψ| H_S + V_I − (ħ²/M)(χ'/χ)∂_R − (ħ²/2M)∂²_R |ψ)`, integrating over x
//! only. It is the potential of the χ equation when `(ψ|ψ) = 1` at every R,
//! which holds when `|χ|` is the marginal amplitude `√(∫|Ψ|² dx)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{first_derivative_samples, second_derivative_samples, ComplexField1D, ComplexField2D};
use crate::linalg::symmetric_eigen;
use crate::spec::CompositeSpec;

use super::hamiltonian::Stencil;
use super::system::SystemOperator;

/// `|χ|` below this fraction of `max |χ|` is outside the retained window.
pub const WINDOW_THRESHOLD: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorMode {
    Prescribed,
    SelfConsistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedState {
    pub mode: FactorMode,
    pub chi: ComplexField1D,
    /// `Ψ/χ` on the window, zero elsewhere.
    pub psi: ComplexField2D,
    /// Inclusive R-index range of the retained window.
    pub window: (usize, usize),
    /// `U_S(R)` on the window.
    pub u_s: Vec<Complex64>,
    /// `(ψ|ψ)(R)` on the window.
    pub psi_norms: Vec<f64>,
    /// Successive χ changes of the self-consistent iteration.
    pub trace: Vec<f64>,
}

impl FactorizedState {
    pub fn window_r(&self) -> Vec<f64> {
        (self.window.0..=self.window.1).map(|i| self.chi.grid.point(i)).collect()
    }

    /// `U_S / (ψ|ψ)`, the back-reaction of a partially normalized ψ.
    pub fn u_s_normalized(&self) -> Vec<Complex64> {
        self.u_s.iter().zip(&self.psi_norms).map(|(u, n)| u / n).collect()
    }

    /// `max |χψ − Ψ|` over the retained window.
    pub fn product_identity_error(&self, full: &ComplexField2D) -> f64 {
        let nx = full.grid.x.n;
        let mut err: f64 = 0.0;
        for ir in self.window.0..=self.window.1 {
            for ix in 0..nx {
                let k = full.grid.index(ix, ir);
                err = err.max((self.chi.data[ir] * self.psi.data[k] - full.data[k]).norm());
            }
        }
        err
    }
}

/// The retained window of χ; a sub-threshold node strictly inside it is an error.
pub fn retained_window(chi: &ComplexField1D) -> Result<(usize, usize)> {
    let max = chi.max_abs();
    if !(max > 0.0) {
        return Err(Error::Degenerate("χ vanishes identically".into()));
    }
    let cut = WINDOW_THRESHOLD * max;
    let above: Vec<bool> = chi.data.iter().map(|z| z.norm() > cut).collect();
    let lo = above.iter().position(|a| *a).unwrap();
    let hi = above.iter().rposition(|a| *a).unwrap();
    let nodes: Vec<f64> = (lo..=hi).filter(|&i| !above[i]).map(|i| chi.grid.point(i)).collect();
    if !nodes.is_empty() {
        return Err(Error::Node { positions: nodes });
    }
    Ok((lo, hi))
}

fn divide(full: &ComplexField2D, chi: &ComplexField1D, window: (usize, usize)) -> ComplexField2D {
    let mut psi = ComplexField2D::zeros(full.grid);
    for ir in window.0..=window.1 {
        for ix in 0..full.grid.x.n {
            let k = full.grid.index(ix, ir);
            psi.data[k] = full.data[k] / chi.data[ir];
        }
    }
    psi
}

/// Terms of the ψ equation on the window, per R slice.
struct WindowTerms {
    /// `(H_S + V_I − (ħ²/M)(χ'/χ)∂_R − (ħ²/2M)∂²_R) ψ`
    applied: Vec<Vec<Complex64>>,
    slices: Vec<Vec<Complex64>>,
}

fn window_terms(state: &FactorizedState, spec: &CompositeSpec, stencil: Stencil) -> Result<WindowTerms> {
    let grid = state.psi.grid;
    let (lo, hi) = state.window;
    let len = hi - lo + 1;
    if len < 4 {
        return Err(Error::Window(format!("retained window has {len} R nodes; the R stencils need 4")));
    }
    let nx = grid.x.n;
    let hr = grid.r.spacing();
    let m = spec.env_mass;
    let h2 = spec.hbar * spec.hbar;
    let chi_d = first_derivative_samples(&state.chi.data, hr);
    let sys = SystemOperator::new(&spec.v_sys, &spec.v_int, spec.sys_mass, spec.hbar, grid.x, stencil)?;

    // R derivatives of ψ along each x line, restricted to the window.
    let mut d1 = vec![vec![ZERO; nx]; len];
    let mut d2 = vec![vec![ZERO; nx]; len];
    for ix in 0..nx {
        let line: Vec<Complex64> = (lo..=hi).map(|ir| state.psi.data[grid.index(ix, ir)]).collect();
        let a = first_derivative_samples(&line, hr);
        let b = second_derivative_samples(&line, hr);
        for j in 0..len {
            d1[j][ix] = a[j];
            d2[j][ix] = b[j];
        }
    }
    let mut applied = Vec::with_capacity(len);
    let mut slices = Vec::with_capacity(len);
    for (j, ir) in (lo..=hi).enumerate() {
        let r = grid.r.point(ir);
        let slice = state.psi.slice_at_r(ir).to_vec();
        let mut out = sys.apply(spec.v_int.r_factor(r)?, &slice);
        let log_d = chi_d[ir] / state.chi.data[ir];
        for ix in 0..nx {
            out[ix] -= log_d * d1[j][ix] * (h2 / m) + d2[j][ix] * (0.5 * h2 / m);
        }
        applied.push(out);
        slices.push(slice);
    }
    Ok(WindowTerms { applied, slices })
}

fn x_dot(a: &[Complex64], b: &[Complex64], w: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(w).map(|((p, q), wi)| p.conj() * q * *wi).sum()
}

/// `U_S(R)` on the retained window, together with `(ψ|ψ)(R)`.
pub fn compute_u_s(state: &FactorizedState, spec: &CompositeSpec, stencil: Stencil) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let terms = window_terms(state, spec, stencil)?;
    let wx = state.psi.grid.x.weights();
    let u: Vec<Complex64> = terms.slices.iter().zip(&terms.applied).map(|(s, a)| x_dot(s, a, &wx)).collect();
    let norms: Vec<f64> = terms.slices.iter().map(|s| x_dot(s, s, &wx).re).collect();
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("U_S is not finite on the window".into()));
    }
    Ok((u, norms))
}

/// Norm of the ψ-equation residual relative to `‖ψ‖` on the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsidefResidual {
    pub residual: f64,
    pub hx: f64,
    pub hr: f64,
}

pub fn residual_psidef(state: &FactorizedState, spec: &CompositeSpec, stencil: Stencil) -> Result<PsidefResidual> {
    let terms = window_terms(state, spec, stencil)?;
    let wx = state.psi.grid.x.weights();
    let hr = state.psi.grid.r.spacing();
    let len = terms.slices.len();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..len {
        let wr = if j == 0 || j + 1 == len { 0.5 * hr } else { hr };
        let u = state.u_s[j];
        let lhs: Vec<Complex64> = terms.applied[j].iter().zip(&terms.slices[j]).map(|(a, s)| a - u * s).collect();
        num += wr * x_dot(&lhs, &lhs, &wx).re;
        den += wr * x_dot(&terms.slices[j], &terms.slices[j], &wx).re;
    }
    Ok(PsidefResidual {
        residual: (num / den).sqrt(),
        hx: state.psi.grid.x.spacing(),
        hr,
    })
}

/// `ψ = Ψ/χ` with the caller's χ taken verbatim.
pub fn factorize_prescribed(
    full: &ComplexField2D,
    chi: &ComplexField1D,
    spec: &CompositeSpec,
    stencil: Stencil,
) -> Result<FactorizedState> {
    if !chi.grid.same_as(&full.grid.r) {
        return Err(Error::Shape("χ must live on the R grid of Ψ".into()));
    }
    let window = retained_window(chi)?;
    let mut state = FactorizedState {
        mode: FactorMode::Prescribed,
        chi: chi.clone(),
        psi: divide(full, chi, window),
        window,
        u_s: Vec::new(),
        psi_norms: Vec::new(),
        trace: Vec::new(),
    };
    let (u, n) = compute_u_s(&state, spec, stencil)?;
    state.u_s = u;
    state.psi_norms = n;
    Ok(state)
}

/// Marginal amplitude `√(∫|Ψ|² dx)`.
pub fn marginal_amplitude(full: &ComplexField2D) -> ComplexField1D {
    let wx = full.grid.x.weights();
    let data = (0..full.grid.r.n)
        .map(|ir| {
            let s = full.slice_at_r(ir);
            Complex64::new(x_dot(s, s, &wx).re.max(0.0).sqrt(), 0.0)
        })
        .collect();
    ComplexField1D {
        grid: full.grid.r,
        data,
    }
}

/// Real, positive at its maximum, unit trapezoid norm.
fn fix_gauge(values: Vec<f64>, grid: crate::grid::Grid1D) -> Result<ComplexField1D> {
    let imax = values
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
        .0;
    let sign = if values[imax] < 0.0 { -1.0 } else { 1.0 };
    let f = ComplexField1D::new(grid, values.iter().map(|v| Complex64::new(sign * v, 0.0)).collect())?;
    crate::field::normalize(&f)
}

/// Fixed-point solution of the coupled χ and ψ equations: `U_S` from the
/// current pair, χ from the eigenvector of `−ħ²/2M ∂²_R + V_ε + U_S` with the
/// largest overlap with the previous χ, then `ψ = Ψ/χ`.
pub fn factorize_selfconsistent(
    full: &ComplexField2D,
    spec: &CompositeSpec,
    stencil: Stencil,
    max_iter: usize,
    tol: f64,
) -> Result<FactorizedState> {
    let rgrid = full.grid.r;
    let marg = marginal_amplitude(full);
    let mut chi = fix_gauge(marg.data.iter().map(|z| z.re).collect(), rgrid)?;
    let mut trace = Vec::new();
    let hr = rgrid.spacing();
    let kin = -spec.hbar * spec.hbar / (2.0 * spec.env_mass * hr * hr);
    for _ in 0..max_iter {
        let window = retained_window(&chi)?;
        let mut state = FactorizedState {
            mode: FactorMode::SelfConsistent,
            chi: chi.clone(),
            psi: divide(full, &chi, window),
            window,
            u_s: Vec::new(),
            psi_norms: Vec::new(),
            trace: trace.clone(),
        };
        let (u, norms) = compute_u_s(&state, spec, stencil)?;
        let (lo, hi) = window;
        let len = hi - lo + 1;
        let mut mat = DMatrix::<f64>::zeros(len, len);
        for j in 0..len {
            let r = rgrid.point(lo + j);
            mat[(j, j)] = -2.0 * kin + spec.v_env.eval(r)? + u[j].re;
            if j + 1 < len {
                mat[(j, j + 1)] = kin;
                mat[(j + 1, j)] = kin;
            }
        }
        let (_, vecs) = symmetric_eigen(mat);
        let current: Vec<f64> = (lo..=hi).map(|i| chi.data[i].re).collect();
        let best = (0..len)
            .max_by(|&a, &b| {
                let oa: f64 = vecs.column(a).iter().zip(&current).map(|(p, q)| p * q).sum();
                let ob: f64 = vecs.column(b).iter().zip(&current).map(|(p, q)| p * q).sum();
                oa.abs().total_cmp(&ob.abs())
            })
            .unwrap();
        let mut values = vec![0.0; rgrid.n];
        for j in 0..len {
            values[lo + j] = vecs[(j, best)];
        }
        let next = fix_gauge(values, rgrid)?;
        let diff = next
            .data
            .iter()
            .zip(&chi.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / chi.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        trace.push(diff);
        if diff < tol {
            state.u_s = u;
            state.psi_norms = norms;
            state.trace = trace;
            return Ok(state);
        }
        chi = next;
    }
    Err(Error::Convergence {
        what: format!("self-consistent factorization (χ changes {trace:?})"),
        iterations: max_iter,
        last: trace.last().cloned().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, Grid2D};
    use crate::potential::{Coupling, Potential};

    fn spec() -> CompositeSpec {
        CompositeSpec {
            env_mass: 1.0,
            sys_mass: 1.0,
            hbar: 1.0,
            energy: 1.0,
            clock_energy: None,
            v_env: Potential::harmonic(1.0),
            v_sys: Potential::harmonic(1.0),
            v_int: Coupling::Zero,
        }
    }

    fn separable(g: Grid2D) -> (ComplexField2D, ComplexField1D) {
        let full = ComplexField2D::from_fn(g, |x, r| Complex64::new((-0.5 * (x * x + r * r)).exp() / std::f64::consts::PI.sqrt(), 0.0));
        let chi = ComplexField1D::from_real(g.r, |r| (-0.5 * r * r).exp());
        (full, chi)
    }

    #[test]
    fn identity_factorization_with_unit_chi() {
        let g = Grid2D::new(Grid1D::new(-5.0, 5.0, 41).unwrap(), Grid1D::new(-5.0, 5.0, 41).unwrap()).unwrap();
        let (full, _) = separable(g);
        let one = ComplexField1D::from_real(g.r, |_| 1.0);
        let st = factorize_prescribed(&full, &one, &spec(), Stencil::SecondOrder).unwrap();
        assert_eq!(st.psi.data, full.data);
        assert_eq!(st.window, (0, 40));
    }

    #[test]
    fn separable_psi_is_r_independent() {
        let g = Grid2D::new(Grid1D::new(-5.0, 5.0, 41).unwrap(), Grid1D::new(-4.0, 4.0, 33).unwrap()).unwrap();
        let (full, chi) = separable(g);
        let st = factorize_prescribed(&full, &chi, &spec(), Stencil::SecondOrder).unwrap();
        for ix in 0..41 {
            let line = st.psi.line_at_x(ix);
            for z in &line {
                assert!((z - line[0]).norm() < 1e-10);
            }
        }
        assert!(st.product_identity_error(&full) < 1e-12);
    }

    #[test]
    fn interior_node_is_reported() {
        let g = Grid1D::new(-1.0, 1.0, 21).unwrap();
        let chi = ComplexField1D::from_real(g, |r| r);
        match retained_window(&chi) {
            Err(Error::Node { positions }) => assert!(positions.iter().any(|p| p.abs() < 1e-12)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn narrow_window_rejected() {
        let g = Grid2D::new(Grid1D::new(-1.0, 1.0, 9).unwrap(), Grid1D::new(-1.0, 1.0, 9).unwrap()).unwrap();
        let full = ComplexField2D::from_fn(g, |_, _| Complex64::new(1.0, 0.0));
        let chi = ComplexField1D::new(
            g.r,
            (0..9).map(|i| Complex64::new(if (3..=5).contains(&i) { 1.0 } else { 0.0 }, 0.0)).collect(),
        )
        .unwrap();
        assert!(matches!(factorize_prescribed(&full, &chi, &spec(), Stencil::SecondOrder), Err(Error::Window(_))));
    }
    /// Discrete ground state of a 1D Dirichlet operator, zero at the walls.
    fn discrete_ground(v: &Potential, grid: Grid1D) -> (f64, Vec<f64>) {
        let op = SystemOperator::new(v, &Coupling::Zero, 1.0, 1.0, grid, Stencil::SecondOrder).unwrap();
        let (vals, vecs) = symmetric_eigen(op.matrix(0.0));
        let mut out = vec![0.0; grid.n];
        let sign = if vecs.column(0).sum() < 0.0 { -1.0 } else { 1.0 };
        for i in 0..grid.n - 2 {
            out[i + 1] = sign * vecs[(i, 0)];
        }
        (vals[0], out)
    }

    fn discrete_product(g: Grid2D) -> (ComplexField2D, f64) {
        let (ex, gx) = discrete_ground(&Potential::harmonic(1.0), g.x);
        let (_, gr) = discrete_ground(&Potential::harmonic(1.0), g.r);
        let f = ComplexField2D::new(
            g,
            (0..g.len()).map(|k| Complex64::new(gx[k % g.x.n] * gr[k / g.x.n], 0.0)).collect(),
        )
        .unwrap();
        (crate::field::normalize_2d(&f).unwrap(), ex)
    }

    #[test]
    fn u_s_equals_system_energy_when_uncoupled() {
        let g = Grid2D::new(Grid1D::new(-6.0, 6.0, 61).unwrap(), Grid1D::new(-6.0, 6.0, 61).unwrap()).unwrap();
        let (full, ex) = discrete_product(g);
        let chi = marginal_amplitude(&full);
        let st = factorize_prescribed(&full, &chi, &spec(), Stencil::SecondOrder).unwrap();
        for u in &st.u_s {
            assert!((u - ex).norm() < 1e-6, "{u} vs {ex}");
        }
        let res = residual_psidef(&st, &spec(), Stencil::SecondOrder).unwrap();
        assert!(res.residual < 1e-6, "{res:?}");
    }

    #[test]
    fn inconsistent_chi_raises_the_residual() {
        let g = Grid2D::new(Grid1D::new(-6.0, 6.0, 61).unwrap(), Grid1D::new(-6.0, 6.0, 61).unwrap()).unwrap();
        let (full, _) = discrete_product(g);
        let good = factorize_prescribed(&full, &marginal_amplitude(&full), &spec(), Stencil::SecondOrder).unwrap();
        // the ground state of a stiffer clock oscillator
        let wrong = crate::field::normalize(&ComplexField1D::from_real(g.r, |r| (-0.65 * r * r).exp())).unwrap();
        let bad = factorize_prescribed(&full, &wrong, &spec(), Stencil::SecondOrder).unwrap();
        let a = residual_psidef(&good, &spec(), Stencil::SecondOrder).unwrap().residual;
        let b = residual_psidef(&bad, &spec(), Stencil::SecondOrder).unwrap().residual;
        assert!(b > 10.0 * a, "{a} {b}");
    }

    #[test]
    fn selfconsistent_separable_converges_immediately() {
        let g = Grid2D::new(Grid1D::new(-6.0, 6.0, 61).unwrap(), Grid1D::new(-6.0, 6.0, 61).unwrap()).unwrap();
        let (full, ex) = discrete_product(g);
        let st = factorize_selfconsistent(&full, &spec(), Stencil::SecondOrder, 10, 1e-6).unwrap();
        assert!(st.trace.len() <= 2, "{:?}", st.trace);
        assert_eq!(st.mode, FactorMode::SelfConsistent);
        let marg = crate::field::normalize(&marginal_amplitude(&full)).unwrap();
        for (a, b) in st.chi.data.iter().zip(&marg.data) {
            assert!((a - b).norm() < 1e-6);
        }
        for u in &st.u_s {
            assert!((u - ex).norm() < 1e-6);
        }
        assert!(st.product_identity_error(&full) < 1e-12);
    }
}
