//! The conditional system state `ψ_cond(x, t(R)) = Ψ(x, R)/χ_WKB(R)` seen at
//! clock reading R, and its residual against the system TDSE.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::TimeMap;
use crate::error::{Error, Result};
use crate::field::{ComplexField1D, ComplexField2D};
use crate::semiclassics::WKBState;
use crate::spec::CompositeSpec;
use crate::stationary::{Stencil, SystemOperator};

use super::tdse::WavefunctionTrajectory;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTrajectory {
    /// Clock readings of the slices.
    pub r: Vec<f64>,
    /// Local clock velocity `p(R)/M` at each slice.
    pub velocity: Vec<f64>,
    /// Slices at `t(R)`; norms are reported, not renormalized.
    pub trajectory: WavefunctionTrajectory,
}

impl ConditionalTrajectory {
    /// `(max − min)/mean` of the slice norms.
    pub fn norm_variation(&self) -> f64 {
        let n = &self.trajectory.norms;
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        (n.iter().cloned().fold(f64::MIN, f64::max) - n.iter().cloned().fold(f64::MAX, f64::min)) / mean
    }
}

/// Divides each R slice of Ψ by `χ_WKB(R)`; the WKB grid must be an aligned
/// run of nodes of Ψ's R grid.
pub fn conditional_from_composite(full: &ComplexField2D, wkb: &WKBState, tmap: &TimeMap) -> Result<ConditionalTrajectory> {
    let rg = full.grid.r;
    let wg = wkb.r_grid;
    let h = rg.spacing();
    let offset = (wg.min - rg.min) / h;
    let first = offset.round();
    if (offset - first).abs() > 1e-9 || first < 0.0 || (wg.spacing() - h).abs() > 1e-12 * h || first as usize + wg.n > rg.n {
        return Err(Error::Shape("the WKB grid must be an aligned sub-grid of the composite R grid".into()));
    }
    let first = first as usize;
    let chi = wkb.chi();
    let mut r = Vec::with_capacity(wg.n);
    let mut times = Vec::with_capacity(wg.n);
    let mut states = Vec::with_capacity(wg.n);
    let mut norms = Vec::with_capacity(wg.n);
    for j in 0..wg.n {
        let rj = wg.point(j);
        if rj < tmap.r_grid.min - 1e-12 || rj > tmap.r_grid.max + 1e-12 {
            return Err(Error::Domain {
                coord: rj,
                min: tmap.r_grid.min,
                max: tmap.r_grid.max,
            });
        }
        let slice = full.slice_at_r(first + j);
        let f = ComplexField1D {
            grid: full.grid.x,
            data: slice.iter().map(|z| z / chi.data[j]).collect(),
        };
        norms.push(f.norm());
        states.push(f);
        r.push(rj);
        times.push(tmap.t_at(rj));
    }
    Ok(ConditionalTrajectory {
        r,
        velocity: wkb.momenta.iter().map(|p| p / wkb.mass).collect(),
        trajectory: WavefunctionTrajectory { times, states, norms },
    })
}

/// Three-point Lagrange weights for the first and second derivative at `x`
/// from nodes `xs`.
fn lagrange3(xs: [f64; 3], x: f64) -> ([f64; 3], [f64; 3]) {
    let [a, b, c] = xs;
    let d0 = (a - b) * (a - c);
    let d1 = (b - a) * (b - c);
    let d2 = (c - a) * (c - b);
    (
        [((x - b) + (x - c)) / d0, ((x - a) + (x - c)) / d1, ((x - a) + (x - b)) / d2],
        [2.0 / d0, 2.0 / d1, 2.0 / d2],
    )
}

fn stencil_nodes(k: usize, n: usize) -> [usize; 3] {
    if k == 0 {
        [0, 1, 2]
    } else if k + 1 == n {
        [n - 3, n - 2, n - 1]
    } else {
        [k - 1, k, k + 1]
    }
}

fn norm_sqr(f: &[Complex64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(z, wi)| z.norm_sqr() * wi).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalResidual {
    /// `‖(H_S + V_I − U_S − iħ∂_t)ψ‖/‖ψ‖` over interior slices.
    pub residual: f64,
    /// `‖(ħ²/2Mv²)∂²_t ψ̃‖ / ‖ħ ∂_t ψ̃‖` with `ψ̃ = ψ exp(−(i/ħ)∫U_S dt)`.
    pub rho: f64,
    /// Window-averaged clock velocity used in `rho`, and its spread.
    pub velocity: f64,
    pub velocity_spread: f64,
    /// `U_S(t)` on every slice.
    pub u_s: Vec<f64>,
    /// Per-slice relative residual (endpoints are NaN).
    pub slice_residuals: Vec<f64>,
    /// Norms of `(H_S + V_I)ψ`, `ħ∂_tψ̃` and `(ħ²/2Mv²)∂²_tψ̃` relative to `‖ψ‖`.
    pub hamiltonian_term: f64,
    pub time_derivative_term: f64,
    pub correction_term: f64,
}

/// Residual of the conditional trajectory against the system TDSE.
///
/// The purely time-dependent `U_S(t) = Re(ψ|H_S + V_I − iħ∂_t|ψ)/(ψ|ψ)` is
/// removed by the phase `exp(−(i/ħ)∫U_S dt)`; the derivatives of the
/// rephased state follow from the product rule. Time derivatives are
/// three-point (non-uniform) stencils; the two end slices are dropped.
pub fn tdse_residual_of_conditional(cond: &ConditionalTrajectory, spec: &CompositeSpec) -> Result<ConditionalResidual> {
    let traj = &cond.trajectory;
    let n = traj.len();
    if n < 3 {
        return Err(Error::Shape(format!("need at least 3 slices, got {n}")));
    }
    let grid = traj.states[0].grid;
    let hbar = spec.hbar;
    let op = SystemOperator::new(&spec.v_sys, &spec.v_int, spec.sys_mass, hbar, grid, Stencil::SecondOrder)?;
    let w = grid.weights();
    let t = &traj.times;
    let psi: Vec<&[Complex64]> = traj.states.iter().map(|s| s.data.as_slice()).collect();

    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for k in 0..n {
        let idx = stencil_nodes(k, n);
        let (a, b) = lagrange3([t[idx[0]], t[idx[1]], t[idx[2]]], t[k]);
        let mut f1 = vec![ZERO; grid.n];
        let mut f2 = vec![ZERO; grid.n];
        for (j, &i) in idx.iter().enumerate() {
            for x in 0..grid.n {
                f1[x] += psi[i][x] * a[j];
                f2[x] += psi[i][x] * b[j];
            }
        }
        d1.push(f1);
        d2.push(f2);
    }
    let mut hpsi = Vec::with_capacity(n);
    let mut u_s = Vec::with_capacity(n);
    let ih = Complex64::new(0.0, hbar);
    for k in 0..n {
        let hp = op.apply(spec.v_int.r_factor(cond.r[k])?, psi[k]);
        let num: Complex64 = psi[k]
            .iter()
            .zip(hp.iter().zip(&d1[k]))
            .zip(&w)
            .map(|((p, (h, d)), wi)| p.conj() * (h - ih * d) * *wi)
            .sum();
        u_s.push(num.re / norm_sqr(psi[k], &w));
        hpsi.push(hp);
    }
    // dU_S/dt for the product rule
    let mut du = vec![0.0; n];
    for k in 0..n {
        let idx = stencil_nodes(k, n);
        let (a, _) = lagrange3([t[idx[0]], t[idx[1]], t[idx[2]]], t[k]);
        du[k] = idx.iter().zip(&a).map(|(&i, c)| u_s[i] * c).sum();
    }

    let interior = 1..n - 1;
    let m = interior.len() as f64;
    let vbar = cond.velocity[1..n - 1].iter().sum::<f64>() / m;
    let vmax = cond.velocity[1..n - 1].iter().cloned().fold(f64::MIN, f64::max);
    let vmin = cond.velocity[1..n - 1].iter().cloned().fold(f64::MAX, f64::min);
    let corr = hbar * hbar / (2.0 * spec.env_mass * vbar * vbar);
    let (mut res2, mut psi2, mut h2, mut dt2, mut dd2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut slice_residuals = vec![f64::NAN; n];
    let iu = Complex64::new(0.0, 1.0 / hbar);
    for k in interior {
        let u = u_s[k];
        let r: Vec<Complex64> = (0..grid.n).map(|x| hpsi[k][x] - psi[k][x] * u - ih * d1[k][x]).collect();
        // ∂ψ̃ and ∂²ψ̃ without the unit phase factor, which drops out of every norm
        let dt_tilde: Vec<Complex64> = (0..grid.n).map(|x| d1[k][x] - iu * u * psi[k][x]).collect();
        let dd_tilde: Vec<Complex64> = (0..grid.n)
            .map(|x| d2[k][x] - iu * 2.0 * u * d1[k][x] - iu * du[k] * psi[k][x] - psi[k][x] * (u * u / (hbar * hbar)))
            .collect();
        let rn = norm_sqr(&r, &w);
        let pn = norm_sqr(psi[k], &w);
        slice_residuals[k] = (rn / pn).sqrt();
        res2 += rn;
        psi2 += pn;
        h2 += norm_sqr(&hpsi[k], &w);
        dt2 += hbar * hbar * norm_sqr(&dt_tilde, &w);
        dd2 += corr * corr * norm_sqr(&dd_tilde, &w);
    }
    Ok(ConditionalResidual {
        residual: (res2 / psi2).sqrt(),
        rho: (dd2 / dt2).sqrt(),
        velocity: vbar,
        velocity_spread: vmax - vmin,
        u_s,
        slice_residuals,
        hamiltonian_term: (h2 / psi2).sqrt(),
        time_derivative_term: (dt2 / psi2).sqrt(),
        correction_term: (dd2 / psi2).sqrt(),
    })
}
