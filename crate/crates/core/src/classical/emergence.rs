//! Composite against reduced dynamics: how far the system trajectory seen
//! through the clock reading departs from the time-dependent reduced
//! trajectory, as the clock kinetic energy grows.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{DrivenInteraction, Schedule};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interp::hermite;
use crate::linalg::loglog_slope;
use crate::spec::CompositeSpec;

use super::clock::{clock_time_map, ClockModel};
use super::leapfrog::{integrate_composite, integrate_system_reduced, ReducedSystem};
use super::PhaseState;

/// Scan over the environment mass at fixed initial clock velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalScan {
    pub masses: Vec<f64>,
    pub velocity: f64,
    /// The clock runs from `r_start` to `r_stop`.
    pub r_start: f64,
    pub r_stop: f64,
    pub x0: f64,
    pub p0: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalScanPoint {
    pub mass: f64,
    /// `M v²`, twice the initial clock kinetic energy.
    pub clock_scale: f64,
    /// `max |x_comp − x_red(t(R_comp))|`
    pub deviation: f64,
    /// Mean of `|δp| / 2P` along the run: the neglected `(∂W_S/∂R)²/2M`
    /// relative to the retained cross term.
    pub neglected_ratio: f64,
    /// `E_S / (2 M v²)` with the initial system energy.
    pub predicted_ratio: f64,
    /// `−⟨δp²⟩ / 2M`, the measured system-energy shift.
    pub energy_shift: f64,
    /// `−E_S² / (2 M v²)`
    pub predicted_shift: f64,
    pub system_energy: f64,
    pub composite_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEmergenceReport {
    pub points: Vec<ClassicalScanPoint>,
    /// Least-squares slope of `log D` against `log M v²`.
    pub slope: f64,
    pub monotone: bool,
}

fn scan_point(base: &CompositeSpec, scan: &ClassicalScan, mass: f64) -> Result<ClassicalScanPoint> {
    let v = scan.velocity;
    let mut spec = base.clone();
    spec.env_mass = mass;
    let r0 = scan.r_start;
    let pr0 = mass * v;
    let e_s0 = scan.p0 * scan.p0 / (2.0 * spec.sys_mass) + spec.v_sys.eval(scan.x0)? + spec.v_int.eval(scan.x0, r0)?;
    let e_c = pr0 * pr0 / (2.0 * mass) + spec.v_env.eval(r0)?;
    spec.energy = e_c + e_s0;
    spec.clock_energy = Some(e_c);
    spec.validate()?;

    let length = scan.r_stop - scan.r_start;
    let span = length / v;
    let steps = (span / scan.dt).ceil() as usize;
    let init = PhaseState::new(vec![r0, scan.x0], vec![pr0, scan.p0])?;
    let comp = integrate_composite(&spec, &init, span, steps)?;

    let margin = 0.25 * length;
    let n_r = ((length + margin) / (v * scan.dt)).ceil() as usize + 1;
    let clock = ClockModel::new(spec.v_env.clone(), mass, e_c, Grid1D::new(r0, scan.r_stop + margin, n_r.max(8))?)?;
    let map = Arc::new(clock_time_map(&clock)?);
    let t_end = map.t_end();
    let n_t = (t_end / scan.dt).ceil() as usize;
    let times: Vec<f64> = (0..=n_t).map(|k| t_end * k as f64 / n_t as f64).collect();
    let reduced = ReducedSystem {
        v_sys: spec.v_sys.clone(),
        mass: spec.sys_mass,
        drive: DrivenInteraction::new(spec.v_int.clone(), Schedule::Clock(map.clone())),
    };
    let red = integrate_system_reduced(&reduced, scan.x0, scan.p0, &times)?;
    let dt_red = t_end / n_t as f64;

    let mut deviation: f64 = 0.0;
    let mut ratio_sum = 0.0;
    let mut shift_sum = 0.0;
    for st in &comp.states {
        let (r, x, p_r) = (st.q[0], st.q[1], st.p[0]);
        if r > map.r_grid.max {
            return Err(Error::Domain {
                coord: r,
                min: map.r_grid.min,
                max: map.r_grid.max,
            });
        }
        let t = map.t_at(r);
        let k = ((t / dt_red).floor() as usize).min(n_t - 1);
        let (a, b) = (&red.states[k], &red.states[k + 1]);
        let x_red = hermite(
            times[k],
            times[k + 1],
            a.q[0],
            b.q[0],
            a.p[0] / spec.sys_mass,
            b.p[0] / spec.sys_mass,
            t,
        );
        deviation = deviation.max((x - x_red).abs());
        let p_ref = (2.0 * mass * (spec.energy - spec.v_env.eval(r)?)).sqrt();
        let dp = p_r - p_ref;
        ratio_sum += dp.abs() / (2.0 * p_ref);
        shift_sum += dp * dp / (2.0 * mass);
    }
    let n = comp.states.len() as f64;
    let scale = mass * v * v;
    Ok(ClassicalScanPoint {
        mass,
        clock_scale: scale,
        deviation,
        neglected_ratio: ratio_sum / n,
        predicted_ratio: e_s0 / (2.0 * scale),
        energy_shift: -shift_sum / n,
        predicted_shift: -e_s0 * e_s0 / (2.0 * scale),
        system_energy: e_s0,
        composite_drift: comp.max_relative_energy_drift(),
    })
}

/// Runs every scan point in parallel; results are ordered by scan index.
pub fn classical_emergence_compare(spec: &CompositeSpec, scan: &ClassicalScan) -> Result<ClassicalEmergenceReport> {
    if scan.masses.len() < 2 {
        return Err(Error::InvalidParameter("scan needs at least two masses".into()));
    }
    if !(scan.velocity > 0.0) || !(scan.dt > 0.0) || !(scan.r_stop > scan.r_start) {
        return Err(Error::InvalidParameter("scan velocity, step and clock range must be positive".into()));
    }
    let points: Vec<ClassicalScanPoint> = scan
        .masses
        .par_iter()
        .map(|&m| scan_point(spec, scan, m))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.clock_scale).collect();
    let ds: Vec<f64> = points.iter().map(|p| p.deviation).collect();
    let slope = if ds.iter().all(|d| *d > 0.0) {
        loglog_slope(&xs, &ds)
    } else {
        f64::NAN
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let monotone = order.windows(2).all(|w| ds[w[1]] < ds[w[0]]);
    Ok(ClassicalEmergenceReport { points, slope, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Coupling, Potential};

    fn base(lambda: f64) -> CompositeSpec {
        CompositeSpec {
            env_mass: 1.0,
            sys_mass: 1.0,
            hbar: 1.0,
            energy: 0.0,
            clock_energy: None,
            v_env: Potential::zero(),
            v_sys: Potential::harmonic(1.0),
            v_int: if lambda == 0.0 {
                Coupling::Zero
            } else {
                Coupling::Bilinear { lambda }
            },
        }
    }

    fn scan(masses: Vec<f64>) -> ClassicalScan {
        ClassicalScan {
            masses,
            velocity: 1.0,
            r_start: -2.0,
            r_stop: 2.0,
            x0: 1.0,
            p0: 0.0,
            dt: 2e-4,
        }
    }

    #[test]
    fn decoupled_scan_has_no_deviation() {
        let rep = classical_emergence_compare(&base(0.0), &scan(vec![10.0, 100.0])).unwrap();
        for p in &rep.points {
            assert!(p.deviation < 1e-8, "{}", p.deviation);
        }
    }

    #[test]
    fn bilinear_scan_scales_inversely() {
        let rep = classical_emergence_compare(&base(0.02), &scan(vec![10.0, 100.0, 1000.0, 10_000.0])).unwrap();
        assert!(rep.monotone);
        assert!(rep.slope > -1.5 && rep.slope < -0.5, "slope {}", rep.slope);
        for p in &rep.points {
            let r = p.neglected_ratio / p.predicted_ratio;
            assert!(r > 1.0 / 3.0 && r < 3.0, "ratio {r}");
        }
    }
}
