//! Scan of the conditional-state TDSE residual against the clock's kinetic
//! energy `Mv²`.
//!
//! Each point builds a directed fixed-energy composite state with the system
//! entering in channel 0 and the clock moving at speed `v` at the first
//! node, divides by the WKB clock state at `E_c = E − ε_0`, and measures the
//! residual and the neglected-to-retained ratio ρ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{clock_time_map, ClockModel};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::linalg::loglog_slope;
use crate::semiclassics::wkb_environment;
use crate::spec::CompositeSpec;
use crate::stationary::{directed_state, system_eigenbasis, ChannelEnergies, Stencil};

use super::conditional::{conditional_from_composite, tdse_residual_of_conditional};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmergenceScan {
    /// Clock masses; one scan point each.
    pub masses: Vec<f64>,
    /// Clock speed at the first R node.
    pub velocity: f64,
    pub x_grid: Grid1D,
    pub r_grid: Grid1D,
    pub channels: usize,
    /// RK4 steps per R node when marching.
    pub substeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergencePoint {
    pub mass: f64,
    /// `M v²`
    pub scan_value: f64,
    pub residual: f64,
    pub rho: f64,
    /// `ε_0 / (2Mv²)`
    pub rho_estimate: f64,
    pub velocity: f64,
    pub velocity_spread: f64,
    pub norm_variation: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceReport {
    pub points: Vec<EmergencePoint>,
    /// Log-log slope of ρ against `Mv²` over the successful points.
    pub slope: f64,
    /// Residual strictly decreasing along the scan.
    pub monotone: bool,
}

fn run_point(spec: &CompositeSpec, scan: &EmergenceScan, mass: f64) -> Result<EmergencePoint> {
    let mut s = spec.clone();
    s.env_mass = mass;
    let basis = system_eigenbasis(&s, scan.x_grid, scan.channels, Stencil::SecondOrder, None)?;
    let e0 = match &basis.energies {
        ChannelEnergies::Fixed(e) => e[0],
        _ => unreachable!(),
    };
    let r0 = scan.r_grid.min;
    let clock_energy = 0.5 * mass * scan.velocity * scan.velocity + s.v_env.eval(r0)?;
    let energy = clock_energy + e0;
    s.energy = energy;
    s.clock_energy = Some(clock_energy);
    let state = directed_state(&s, &basis, energy, scan.r_grid, 0, scan.substeps)?;
    let clock = ClockModel::new(s.v_env.clone(), mass, clock_energy, scan.r_grid)?;
    let wkb = wkb_environment(&clock, s.hbar)?;
    let tmap = clock_time_map(&clock)?;
    let cond = conditional_from_composite(&state.field, &wkb, &tmap)?;
    let res = tdse_residual_of_conditional(&cond, &s)?;
    let mv2 = mass * scan.velocity * scan.velocity;
    Ok(EmergencePoint {
        mass,
        scan_value: mv2,
        residual: res.residual,
        rho: res.rho,
        rho_estimate: e0 / (2.0 * mv2),
        velocity: res.velocity,
        velocity_spread: res.velocity_spread,
        norm_variation: cond.norm_variation(),
        error: None,
    })
}

/// Runs every scan point (in parallel); a failing point is recorded with its
/// error and left out of the fit.
pub fn emergence_scan(spec: &CompositeSpec, scan: &EmergenceScan) -> Result<EmergenceReport> {
    if scan.masses.len() < 3 {
        return Err(Error::InvalidParameter("an emergence scan needs at least 3 points".into()));
    }
    if scan.masses.iter().any(|m| !(*m > 0.0)) || !(scan.velocity > 0.0) {
        return Err(Error::InvalidParameter("scan masses and velocity must be positive".into()));
    }
    let lo = scan.masses.iter().cloned().fold(f64::MAX, f64::min);
    let hi = scan.masses.iter().cloned().fold(f64::MIN, f64::max);
    if hi / lo < 30.0 {
        return Err(Error::InvalidParameter(format!("scan spans ×{:.1} in Mv²; at least ×30 is required", hi / lo)));
    }
    let points: Vec<EmergencePoint> = scan
        .masses
        .par_iter()
        .map(|&m| {
            run_point(spec, scan, m).unwrap_or_else(|e| EmergencePoint {
                mass: m,
                scan_value: m * scan.velocity * scan.velocity,
                residual: f64::NAN,
                rho: f64::NAN,
                rho_estimate: f64::NAN,
                velocity: f64::NAN,
                velocity_spread: f64::NAN,
                norm_variation: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let ok: Vec<&EmergencePoint> = points.iter().filter(|p| p.error.is_none()).collect();
    let slope = if ok.len() >= 2 {
        let x: Vec<f64> = ok.iter().map(|p| p.scan_value).collect();
        let y: Vec<f64> = ok.iter().map(|p| p.rho).collect();
        loglog_slope(&x, &y)
    } else {
        f64::NAN
    };
    let mut sorted = ok.clone();
    sorted.sort_by(|a, b| a.scan_value.total_cmp(&b.scan_value));
    let monotone = ok.len() == points.len() && sorted.windows(2).all(|w| w[1].residual < w[0].residual);
    Ok(EmergenceReport { points, slope, monotone })
}
