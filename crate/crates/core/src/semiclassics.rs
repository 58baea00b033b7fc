//! Semiclassical clock: WKB action and amplitude, the term dropped to reach
//! the WKB limit, and the complex quantum time `τ = (i/ħ) M ∫ χ/χ' dR`.
//!
//! Derivatives of sampled χ are taken through its logarithm: `χ'/χ` is the
//! central difference of `ln|χ| + i·arg χ` (phase unwrapped), which is exact
//! for plane waves and real Gaussians.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{clock_time_map, ClockModel, TimeMap};
use crate::error::{Error, Result};
use crate::field::{first_derivative_real, ComplexField1D};
use crate::grid::Grid1D;
use crate::linalg::cumulative_trapezoid;

/// `|χ'|` below this fraction of its maximum is a stationary point.
pub const STATIONARY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WKBState {
    pub r_grid: Grid1D,
    /// `W_ε(R) = ∫ p dR'`, zero at the first node.
    pub action: Vec<f64>,
    /// `p(R)^{−1/2}`, unnormalized.
    pub amplitude: Vec<f64>,
    pub momenta: Vec<f64>,
    pub clock_energy: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl WKBState {
    /// `A exp(i W_ε/ħ)`.
    pub fn chi(&self) -> ComplexField1D {
        ComplexField1D {
            grid: self.r_grid,
            data: self
                .action
                .iter()
                .zip(&self.amplitude)
                .map(|(w, a)| Complex64::from_polar(*a, w / self.hbar))
                .collect(),
        }
    }

    /// Largest `|∂W_ε/∂R − p| / p` with the derivative taken by finite differences.
    pub fn momentum_consistency(&self) -> f64 {
        let d = first_derivative_real(&self.action, self.r_grid.spacing());
        d.iter().zip(&self.momenta).map(|(a, p)| ((a - p) / p).abs()).fold(0.0, f64::max)
    }
}

pub fn wkb_environment(clock: &ClockModel, hbar: f64) -> Result<WKBState> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("ħ must be positive, got {hbar}")));
    }
    let map = clock_time_map(clock)?;
    Ok(WKBState {
        r_grid: clock.r_grid,
        amplitude: map.momenta.iter().map(|p| p.powf(-0.5)).collect(),
        action: map.action,
        momenta: map.momenta,
        clock_energy: clock.energy,
        mass: clock.mass,
        hbar,
    })
}

/// `|ħ W_ε'' / (W_ε')²|` on the grid. `W_ε'' = p'` is evaluated from
/// `p p' = −M V_ε'` so that no extra differencing error enters.
pub fn qenviron_residual(wkb: &WKBState, clock: &ClockModel) -> Result<Vec<f64>> {
    wkb.r_grid
        .points()
        .iter()
        .zip(&wkb.momenta)
        .map(|(r, p)| {
            let dp = -wkb.mass * clock.v_env.derivative(*r)? / p;
            Ok((wkb.hbar * dp / (p * p)).abs())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexTimeMap {
    pub r_grid: Grid1D,
    pub tau: Vec<Complex64>,
}

impl ComplexTimeMap {
    /// `max |Im τ| / max |Re τ|`.
    pub fn imaginary_ratio(&self) -> f64 {
        let im = self.tau.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        let re = self.tau.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
        im / re
    }

    pub fn is_real(&self) -> bool {
        self.tau.iter().all(|z| z.im == 0.0)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.tau.iter().map(|z| z.re).collect()
    }
}

fn unwrap_phase(chi: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(chi.len());
    let mut prev = chi[0].arg();
    out.push(prev);
    for w in chi.windows(2) {
        let step = (w[1] / w[0]).arg();
        prev += step;
        out.push(prev);
    }
    out
}

/// `χ'/χ` via the logarithm; errors on nodes of χ.
pub fn log_derivative(chi: &ComplexField1D) -> Result<Vec<Complex64>> {
    let max = chi.max_abs();
    let nodes: Vec<f64> = chi
        .data
        .iter()
        .enumerate()
        .filter(|(_, z)| !(z.norm() > 0.0) || z.norm() < 1e-300 * max.max(1.0))
        .map(|(i, _)| chi.grid.point(i))
        .collect();
    if !nodes.is_empty() {
        return Err(Error::Node { positions: nodes });
    }
    let h = chi.grid.spacing();
    let ln_mod: Vec<f64> = chi.data.iter().map(|z| z.norm().ln()).collect();
    let d_mod = first_derivative_real(&ln_mod, h);
    let d_arg = first_derivative_real(&unwrap_phase(&chi.data), h);
    Ok(d_mod.into_iter().zip(d_arg).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// `τ(R) = (i/ħ) M ∫_{R_min}^R χ/χ' dR'` by cumulative trapezoid.
pub fn quantum_time(chi: &ComplexField1D, mass: f64, hbar: f64) -> Result<ComplexTimeMap> {
    let ld = log_derivative(chi)?;
    let slope: Vec<f64> = ld.iter().zip(&chi.data).map(|(l, z)| (l * z).norm()).collect();
    let max = slope.iter().cloned().fold(0.0, f64::max);
    let stationary: Vec<f64> = slope
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= STATIONARY_THRESHOLD * max)
        .map(|(i, _)| chi.grid.point(i))
        .collect();
    if !stationary.is_empty() {
        return Err(Error::StationaryPoint { positions: stationary });
    }
    let k = Complex64::new(0.0, mass / hbar);
    let integrand: Vec<Complex64> = ld.iter().map(|l| k / l).collect();
    Ok(ComplexTimeMap {
        r_grid: chi.grid,
        tau: cumulative_trapezoid(&integrand, chi.grid.spacing()),
    })
}

/// `τ(R) = M ∫ A / (A W̃' − iħ A') dR'` from polar tables.
pub fn polar_time(r_grid: Grid1D, amplitude: &[f64], phase_action: &[f64], mass: f64, hbar: f64) -> Result<ComplexTimeMap> {
    if amplitude.len() != r_grid.n || phase_action.len() != r_grid.n {
        return Err(Error::Shape("polar tables must match the R grid".into()));
    }
    if let Some(i) = amplitude.iter().position(|a| !(*a > 0.0)) {
        return Err(Error::Node {
            positions: vec![r_grid.point(i)],
        });
    }
    let h = r_grid.spacing();
    let ln_a: Vec<f64> = amplitude.iter().map(|a| a.ln()).collect();
    let d_ln_a = first_derivative_real(&ln_a, h);
    let d_w = first_derivative_real(phase_action, h);
    let denom: Vec<Complex64> = d_w.iter().zip(&d_ln_a).map(|(w, l)| Complex64::new(*w, -hbar * l)).collect();
    let max = denom.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let stationary: Vec<f64> = denom
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() <= STATIONARY_THRESHOLD * max)
        .map(|(i, _)| r_grid.point(i))
        .collect();
    if !stationary.is_empty() {
        return Err(Error::StationaryPoint { positions: stationary });
    }
    let integrand: Vec<Complex64> = denom.iter().map(|d| Complex64::new(mass, 0.0) / d).collect();
    Ok(ComplexTimeMap {
        r_grid,
        tau: cumulative_trapezoid(&integrand, h),
    })
}

/// Leading imaginary part of the polar time, `M ħ ∫ (A'/A)/p² dR`.
pub fn polar_time_first_order(r_grid: Grid1D, amplitude: &[f64], momenta: &[f64], mass: f64, hbar: f64) -> Vec<f64> {
    let ln_a: Vec<f64> = amplitude.iter().map(|a| a.ln()).collect();
    let d = first_derivative_real(&ln_a, r_grid.spacing());
    let integrand: Vec<f64> = d.iter().zip(momenta).map(|(l, p)| mass * hbar * l / (p * p)).collect();
    cumulative_trapezoid(&integrand, r_grid.spacing())
}

/// A free clock with constant momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfectClock {
    pub mass: f64,
    pub momentum: f64,
    pub map: TimeMap,
    pub chi: ComplexField1D,
}

impl PerfectClock {
    pub fn velocity(&self) -> f64 {
        self.momentum / self.mass
    }

    /// `t = M R / P`, measured from R = 0.
    pub fn time(&self, r: f64) -> f64 {
        self.mass * r / self.momentum
    }
}

/// `t(R) = M R/P` and the plane wave `(2πħ)^{−1/2} exp(iPR/ħ)`. The table
/// time map starts at the grid minimum.
pub fn perfect_clock(mass: f64, momentum: f64, r_grid: Grid1D, hbar: f64) -> Result<PerfectClock> {
    if momentum == 0.0 || !momentum.is_finite() {
        return Err(Error::InvalidParameter("the perfect clock needs a nonzero momentum".into()));
    }
    if !(mass > 0.0) || !(hbar > 0.0) {
        return Err(Error::InvalidParameter("mass and ħ must be positive".into()));
    }
    r_grid.validate()?;
    let rs = r_grid.points();
    let times: Vec<f64> = rs.iter().map(|r| mass * (r - r_grid.min) / momentum).collect();
    let action: Vec<f64> = rs.iter().map(|r| momentum * (r - r_grid.min)).collect();
    let map = TimeMap::from_tables(r_grid, mass, times, vec![momentum; r_grid.n], action)?;
    let norm = (2.0 * std::f64::consts::PI * hbar).powf(-0.5);
    let chi = ComplexField1D::from_fn(r_grid, |r| Complex64::from_polar(norm, momentum * r / hbar));
    Ok(PerfectClock { mass, momentum, map, chi })
}
