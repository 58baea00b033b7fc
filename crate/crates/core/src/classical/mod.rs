//! Classical mechanics of the composite: Jacobi paths, symplectic integration,
//! the clock and its time map, and the reduced system dynamics.

pub mod clock;
pub mod emergence;
pub mod jacobi;
pub mod leapfrog;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clock::{clock_momentum, clock_time_map, ClockModel, TimeMap};
pub use emergence::{classical_emergence_compare, ClassicalEmergenceReport, ClassicalScan, ClassicalScanPoint};
pub use jacobi::{
    endpoint_momentum_check, jacobi_path_minimize, path_momenta, DiscretePath, EndpointReport, JacobiOptions, Metric,
    ScalarField,
};
pub use leapfrog::{integrate_composite, integrate_composite_adaptive, integrate_system_reduced, ReducedSystem};

/// Point in phase space; `q = [R, x]` for the composite, `q = [x]` for the
/// reduced system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::Shape(format!("phase state with {} coordinates and {} momenta", q.len(), p.len())));
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("phase state components must be finite".into()));
        }
        Ok(PhaseState { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Sampled phase-space history. `params` is the integration parameter
/// (Newtonian time for the reduced system, an internal affine parameter for
/// the composite), `action` the accumulated `∫ Σ p_j dq_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub action: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// `max |H(s) − H(0)| / |H(0)|`; absolute when `H(0) = 0`.
    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / scale
    }

    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.q[j]).collect()
    }

    pub fn momentum(&self, j: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.p[j]).collect()
    }
}

/// System energy after the neglected `(∂W_S/∂R)²/2M` term is restored at
/// first order: `E_S (1 − E_S / (2 M v²))`.
pub fn classical_energy_correction(e_s: f64, mass: f64, velocity: f64) -> Result<f64> {
    if !(mass > 0.0) || !(velocity > 0.0) {
        return Err(Error::InvalidParameter("mass and velocity must be positive".into()));
    }
    Ok(e_s * (1.0 - e_s / (2.0 * mass * velocity * velocity)))
}
