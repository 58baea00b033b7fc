//! The environment as a clock: momentum `p(R) = √(2M(E_c − V_ε(R)))`,
//! the time map `t(R) = M ∫ dR'/p(R')` and the clock action `W_ε(R) = ∫ p dR'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interp::MonotoneCubic;
use crate::linalg::cumulative_trapezoid;
use crate::potential::Potential;

/// A classical clock moving in `V_ε` at fixed energy `E_c`, restricted to one
/// classically allowed branch covered by `r_grid`, moving towards larger `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockModel {
    pub v_env: Potential,
    pub mass: f64,
    pub energy: f64,
    pub r_grid: Grid1D,
}

impl ClockModel {
    pub fn new(v_env: Potential, mass: f64, energy: f64, r_grid: Grid1D) -> Result<Self> {
        let clock = ClockModel {
            v_env,
            mass,
            energy,
            r_grid,
        };
        clock.validate()?;
        Ok(clock)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidParameter(format!("clock mass must be positive, got {}", self.mass)));
        }
        if !self.energy.is_finite() {
            return Err(Error::InvalidParameter("clock energy must be finite".into()));
        }
        self.r_grid.validate()?;
        self.v_env.validate()
    }

    /// Kinetic energy `E_c − V_ε(R)` at each grid node, failing at the first
    /// node that is not classically allowed.
    fn allowed_margins(&self) -> Result<Vec<f64>> {
        self.r_grid
            .points()
            .into_iter()
            .map(|r| {
                let margin = self.energy - self.v_env.eval(r)?;
                if margin > 0.0 {
                    Ok(margin)
                } else {
                    Err(Error::TurningPoint { r, margin })
                }
            })
            .collect()
    }

    pub fn momentum(&self, r: f64) -> Result<f64> {
        clock_momentum(self, r)
    }

    pub fn velocity(&self, r: f64) -> Result<f64> {
        Ok(self.momentum(r)? / self.mass)
    }
}

/// `p(R) = √(2M(E_c − V_ε(R)))`
pub fn clock_momentum(clock: &ClockModel, r: f64) -> Result<f64> {
    let margin = clock.energy - clock.v_env.eval(r)?;
    if margin > 0.0 {
        Ok((2.0 * clock.mass * margin).sqrt())
    } else {
        Err(Error::TurningPoint { r, margin })
    }
}

/// Monotone map between clock reading `R` and time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    pub r_grid: Grid1D,
    pub mass: f64,
    /// `t(R)` at each grid node.
    pub times: Vec<f64>,
    /// `p(R)` at each grid node.
    pub momenta: Vec<f64>,
    /// `W_ε(R) = ∫ p dR'` at each grid node.
    pub action: Vec<f64>,
    forward: MonotoneCubic,
    inverse: MonotoneCubic,
}

impl TimeMap {
    /// Builds the map from tabulated `t(R)` and `p(R)`; the interpolants use the
    /// exact slopes `dt/dR = M/p` and `dR/dt = p/M`.
    pub fn from_tables(r_grid: Grid1D, mass: f64, times: Vec<f64>, momenta: Vec<f64>, action: Vec<f64>) -> Result<Self> {
        if times.len() != r_grid.n || momenta.len() != r_grid.n || action.len() != r_grid.n {
            return Err(Error::Shape("time map tables must match the R grid".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Numerical("time map is not strictly increasing".into()));
        }
        let rs = r_grid.points();
        let forward = MonotoneCubic::with_slopes(rs.clone(), times.clone(), momenta.iter().map(|p| mass / p).collect())?;
        let inverse = MonotoneCubic::with_slopes(times.clone(), rs, momenta.iter().map(|p| p / mass).collect())?;
        Ok(TimeMap {
            r_grid,
            mass,
            times,
            momenta,
            action,
            forward,
            inverse,
        })
    }

    pub fn t_at(&self, r: f64) -> f64 {
        self.forward.eval(r)
    }

    pub fn r_at(&self, t: f64) -> f64 {
        self.inverse.eval(t)
    }

    /// `dR/dt` of the interpolated inverse map.
    pub fn r_rate(&self, t: f64) -> f64 {
        self.inverse.derivative(t)
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Mean clock velocity `p/M` over the grid, and its spread (max − min).
    pub fn mean_velocity(&self) -> (f64, f64) {
        let v: Vec<f64> = self.momenta.iter().map(|p| p / self.mass).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        (mean, spread)
    }
}

/// `t(R) = M ∫_{R_min}^R dR'/p(R')` by cumulative trapezoid quadrature.
pub fn clock_time_map(clock: &ClockModel) -> Result<TimeMap> {
    clock.validate()?;
    let margins = clock.allowed_margins()?;
    let momenta: Vec<f64> = margins.iter().map(|k| (2.0 * clock.mass * k).sqrt()).collect();
    let h = clock.r_grid.spacing();
    let inv: Vec<f64> = momenta.iter().map(|p| clock.mass / p).collect();
    let times = cumulative_trapezoid(&inv, h);
    let action = cumulative_trapezoid(&momenta, h);
    TimeMap::from_tables(clock.r_grid, clock.mass, times, momenta, action)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_clock(mass: f64, energy: f64, r: Grid1D) -> ClockModel {
        ClockModel::new(Potential::zero(), mass, energy, r).unwrap()
    }

    #[test]
    fn momentum_examples() {
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        assert!((free_clock(2.0, 1.0, g).momentum(0.3).unwrap() - 2.0).abs() < 1e-15);
        let harmonic = ClockModel::new(Potential::harmonic(1.0), 1.0, 1.0, g).unwrap();
        assert!((harmonic.momentum(1.0).unwrap() - 1.0).abs() < 1e-15);
        let turning = ClockModel::new(Potential::harmonic(2.0), 1.0, 1.0, g).unwrap();
        assert!(matches!(turning.momentum(1.0), Err(Error::TurningPoint { .. })));
    }

    #[test]
    fn free_clock_time_is_linear() {
        // M = 1, P = 2 → E_c = 2
        let g = Grid1D::new(0.0, 4.0, 41).unwrap();
        let map = clock_time_map(&free_clock(1.0, 2.0, g)).unwrap();
        assert!((map.t_end() - 2.0).abs() < 1e-14);
        assert!((map.t_at(3.3) - 1.65).abs() < 1e-14);
    }

    #[test]
    fn linear_potential_matches_antiderivative() {
        let (m, ec, f) = (1.5, 2.0, 0.8);
        let g = Grid1D::new(0.0, 3.0, 3001).unwrap();
        let clock = ClockModel::new(Potential::Linear { slope: -f }, m, ec, g).unwrap();
        let map = clock_time_map(&clock).unwrap();
        let exact = |r: f64| m * ((2.0 * m * (ec + f * r)).sqrt() - (2.0 * m * ec).sqrt()) / (m * f);
        for (i, r) in g.points().iter().enumerate() {
            assert!((map.times[i] - exact(*r)).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let g = Grid1D::new(-1.0, 1.0, 201).unwrap();
        let clock = ClockModel::new(Potential::harmonic(1.0), 1.0, 2.0, g).unwrap();
        let map = clock_time_map(&clock).unwrap();
        for (i, r) in g.points().iter().enumerate() {
            assert!((map.r_at(map.times[i]) - r).abs() < 1e-8 * g.spacing());
            if i > 0 {
                assert!(map.times[i] > map.times[i - 1]);
            }
        }
        // between nodes the forward/inverse interpolants stay consistent
        for k in 0..50 {
            let r = -0.99 + 0.0397 * k as f64;
            assert!((map.r_at(map.t_at(r)) - r).abs() < 1e-6);
        }
    }

    #[test]
    fn turning_point_inside_grid_is_named() {
        let g = Grid1D::new(0.0, 2.0, 21).unwrap();
        let clock = ClockModel::new(Potential::harmonic(1.0), 1.0, 0.5, g).unwrap();
        match clock_time_map(&clock) {
            Err(Error::TurningPoint { r, .. }) => assert!((r - 1.0).abs() < 1e-12),
            other => panic!("expected turning point, got {other:?}"),
        }
    }
}
