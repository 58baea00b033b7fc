use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Coupling, Potential};

/// The closed composite: an environment (clock) coordinate `R` of mass `M`
/// and a system coordinate `x` of mass `m`, at total energy `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSpec {
    /// Environment mass `M`.
    pub env_mass: f64,
    /// System mass `m`.
    pub sys_mass: f64,
    pub hbar: f64,
    /// Total energy `E` of the composite.
    pub energy: f64,
    /// Fixed clock energy `E_c`, when the clock is configured separately.
    #[serde(default)]
    pub clock_energy: Option<f64>,
    pub v_env: Potential,
    pub v_sys: Potential,
    pub v_int: Coupling,
}

impl CompositeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.env_mass, "env_mass")?;
        positive(self.sys_mass, "sys_mass")?;
        positive(self.hbar, "hbar")?;
        if !self.energy.is_finite() {
            return Err(Error::InvalidParameter("energy must be finite".into()));
        }
        if let Some(ec) = self.clock_energy {
            if !ec.is_finite() || ec > self.energy {
                return Err(Error::InvalidParameter(format!(
                    "clock_energy {ec} must be finite and not exceed energy {}",
                    self.energy
                )));
            }
        }
        self.v_env.validate()?;
        self.v_sys.validate()?;
        self.v_int.validate()
    }

    /// `V_ε(R) + V_S(x) + V_I(x, R)`
    pub fn potential(&self, x: f64, r: f64) -> Result<f64> {
        Ok(self.v_env.eval(r)? + self.v_sys.eval(x)? + self.v_int.eval(x, r)?)
    }

    /// Energy of the classical composite at `(R, x)` with momenta `(p_R, p_x)`.
    pub fn hamiltonian(&self, r: f64, x: f64, p_r: f64, p_x: f64) -> Result<f64> {
        Ok(p_r * p_r / (2.0 * self.env_mass) + p_x * p_x / (2.0 * self.sys_mass) + self.potential(x, r)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> CompositeSpec {
        CompositeSpec {
            env_mass: 10.0,
            sys_mass: 1.0,
            hbar: 1.0,
            energy: 5.0,
            clock_energy: Some(4.0),
            v_env: Potential::zero(),
            v_sys: Potential::harmonic(1.0),
            v_int: Coupling::Zero,
        }
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        let mut s = base();
        s.env_mass = -1.0;
        assert!(s.validate().is_err());
        let mut s = base();
        s.clock_energy = Some(6.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"env_mass":1,"sys_mass":1,"hbar":1,"energy":1,"v_env":{"kind":"constant","value":0},
            "v_sys":{"kind":"constant","value":0},"v_int":{"kind":"zero"},"bogus":3}"#;
        assert!(serde_json::from_str::<CompositeSpec>(json).is_err());
    }
}
