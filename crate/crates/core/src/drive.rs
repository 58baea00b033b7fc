//! `V_I(x, t)`: the interaction seen by the system once the clock reading `R`
//! has been replaced by a time.

use std::sync::Arc;

use crate::classical::TimeMap;
use crate::error::Result;
use crate::potential::Coupling;

/// How the environment coordinate advances with time.
#[derive(Debug, Clone)]
pub enum Schedule {
    /// `R` held fixed; the interaction is static.
    Frozen(f64),
    /// `R = r0 + v t`, the perfect clock.
    Uniform { r0: f64, velocity: f64 },
    /// `R(t)` from a classical clock's time map.
    Clock(Arc<TimeMap>),
}

impl Schedule {
    pub fn r_at(&self, t: f64) -> f64 {
        match self {
            Schedule::Frozen(r) => *r,
            Schedule::Uniform { r0, velocity } => r0 + velocity * t,
            Schedule::Clock(map) => map.r_at(t),
        }
    }

    pub fn r_rate(&self, t: f64) -> f64 {
        match self {
            Schedule::Frozen(_) => 0.0,
            Schedule::Uniform { velocity, .. } => *velocity,
            Schedule::Clock(map) => map.r_rate(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DrivenInteraction {
    pub coupling: Coupling,
    pub schedule: Schedule,
}

impl DrivenInteraction {
    pub fn new(coupling: Coupling, schedule: Schedule) -> Self {
        DrivenInteraction { coupling, schedule }
    }

    pub fn none() -> Self {
        DrivenInteraction {
            coupling: Coupling::Zero,
            schedule: Schedule::Frozen(0.0),
        }
    }

    pub fn is_static(&self) -> bool {
        self.coupling.is_zero() || matches!(self.schedule, Schedule::Frozen(_))
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        self.coupling.eval(x, self.schedule.r_at(t))
    }

    pub fn d_dx(&self, x: f64, t: f64) -> Result<f64> {
        self.coupling.d_dx(x, self.schedule.r_at(t))
    }

    /// `∂V_I/∂t = ∂V_I/∂R · dR/dt`
    pub fn d_dt(&self, x: f64, t: f64) -> Result<f64> {
        let rate = self.schedule.r_rate(t);
        if rate == 0.0 {
            return Ok(0.0);
        }
        Ok(self.coupling.d_dr(x, self.schedule.r_at(t))? * rate)
    }

    /// The time-dependent scalar `g(R(t))` multiplying `h(x)`.
    pub fn r_factor(&self, t: f64) -> Result<f64> {
        self.coupling.r_factor(self.schedule.r_at(t))
    }
}
