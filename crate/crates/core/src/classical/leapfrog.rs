//! Velocity-Verlet integration of the composite and of the reduced system.

use crate::drive::DrivenInteraction;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::spec::CompositeSpec;

use super::{PhaseState, Trajectory};

/// Default relative energy-drift bound for conservative runs.
pub const ENERGY_DRIFT_BOUND: f64 = 1e-6;

fn composite_force(spec: &CompositeSpec, r: f64, x: f64) -> Result<[f64; 2]> {
    Ok([
        -(spec.v_env.derivative(r)? + spec.v_int.d_dr(x, r)?),
        -(spec.v_sys.derivative(x)? + spec.v_int.d_dx(x, r)?),
    ])
}

/// Hamilton's equations for `H = p_R²/2M + p_x²/2m + V_ε + V_S + V_I` from
/// `initial = ([R, x], [p_R, p_x])` over a parameter span, in `steps` equal steps.
pub fn integrate_composite(spec: &CompositeSpec, initial: &PhaseState, span: f64, steps: usize) -> Result<Trajectory> {
    spec.validate()?;
    if initial.dim() != 2 {
        return Err(Error::Shape("composite phase state must be [R, x]".into()));
    }
    if steps == 0 || !(span > 0.0) {
        return Err(Error::InvalidParameter("span and step count must be positive".into()));
    }
    let dt = span / steps as f64;
    let masses = [spec.env_mass, spec.sys_mass];
    let mut q = [initial.q[0], initial.q[1]];
    let mut p = [initial.p[0], initial.p[1]];
    let h0 = spec.hamiltonian(q[0], q[1], p[0], p[1])?;
    if !h0.is_finite() {
        return Err(Error::InvalidParameter("initial energy is not finite".into()));
    }
    let mut force = composite_force(spec, q[0], q[1])?;
    let mut traj = Trajectory {
        params: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        action: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
    };
    let mut w = 0.0;
    traj.params.push(0.0);
    traj.states.push(PhaseState { q: q.to_vec(), p: p.to_vec() });
    traj.action.push(0.0);
    traj.energy.push(h0);
    for k in 1..=steps {
        let (q_old, p_old) = (q, p);
        for j in 0..2 {
            p[j] += 0.5 * dt * force[j];
            q[j] += dt * p[j] / masses[j];
        }
        force = composite_force(spec, q[0], q[1])?;
        for j in 0..2 {
            p[j] += 0.5 * dt * force[j];
        }
        for j in 0..2 {
            w += 0.5 * (p[j] + p_old[j]) * (q[j] - q_old[j]);
        }
        let h = spec.hamiltonian(q[0], q[1], p[0], p[1])?;
        traj.params.push(k as f64 * dt);
        traj.states.push(PhaseState { q: q.to_vec(), p: p.to_vec() });
        traj.action.push(w);
        traj.energy.push(h);
    }
    let drift = traj.max_relative_energy_drift();
    if !(drift < ENERGY_DRIFT_BOUND) {
        return Err(Error::Stability {
            drift,
            bound: ENERGY_DRIFT_BOUND,
            step: dt,
        });
    }
    Ok(traj)
}

/// Retries [`integrate_composite`] with the step halved on each stability
/// failure, at most `max_halvings` times.
pub fn integrate_composite_adaptive(
    spec: &CompositeSpec,
    initial: &PhaseState,
    span: f64,
    steps: usize,
    max_halvings: usize,
) -> Result<Trajectory> {
    let mut n = steps;
    let mut last = None;
    for _ in 0..=max_halvings {
        match integrate_composite(spec, initial, span, n) {
            Err(e @ Error::Stability { .. }) => {
                last = Some(e);
                n *= 2;
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// System part of the composite with the clock replaced by a schedule.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub v_sys: Potential,
    pub mass: f64,
    pub drive: DrivenInteraction,
}

impl ReducedSystem {
    pub fn energy(&self, x: f64, p: f64, t: f64) -> Result<f64> {
        Ok(p * p / (2.0 * self.mass) + self.v_sys.eval(x)? + self.drive.value(x, t)?)
    }

    fn force(&self, x: f64, t: f64) -> Result<f64> {
        Ok(-(self.v_sys.derivative(x)? + self.drive.d_dx(x, t)?))
    }
}

/// `ẋ = p/m`, `ṗ = −∂_x(V_S + V_I(x, t))` on the uniform time samples `times`.
/// Conservation is enforced only when the interaction is static.
pub fn integrate_system_reduced(system: &ReducedSystem, x0: f64, p0: f64, times: &[f64]) -> Result<Trajectory> {
    if !(system.mass > 0.0) {
        return Err(Error::InvalidParameter("system mass must be positive".into()));
    }
    if times.len() < 2 {
        return Err(Error::Shape("need at least two time samples".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time samples must increase".into()));
    }
    let (mut x, mut p) = (x0, p0);
    let mut force = system.force(x, times[0])?;
    let mut traj = Trajectory {
        params: times.to_vec(),
        states: Vec::with_capacity(times.len()),
        action: Vec::with_capacity(times.len()),
        energy: Vec::with_capacity(times.len()),
    };
    let mut w = 0.0;
    traj.states.push(PhaseState { q: vec![x], p: vec![p] });
    traj.action.push(0.0);
    traj.energy.push(system.energy(x, p, times[0])?);
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let (x_old, p_old) = (x, p);
        p += 0.5 * dt * force;
        x += dt * p / system.mass;
        force = system.force(x, times[k])?;
        p += 0.5 * dt * force;
        w += 0.5 * (p + p_old) * (x - x_old);
        traj.states.push(PhaseState { q: vec![x], p: vec![p] });
        traj.action.push(w);
        traj.energy.push(system.energy(x, p, times[k])?);
    }
    if system.drive.is_static() {
        let drift = traj.max_relative_energy_drift();
        if !(drift < ENERGY_DRIFT_BOUND) {
            return Err(Error::Stability {
                drift,
                bound: ENERGY_DRIFT_BOUND,
                step: times[1] - times[0],
            });
        }
    }
    Ok(traj)
}
