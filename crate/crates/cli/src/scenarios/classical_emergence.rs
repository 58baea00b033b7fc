use serde::{Deserialize, Serialize};

use emergent_time::classical::{classical_emergence_compare, ClassicalScan};
use emergent_time::{CompositeSpec, Coupling, Potential};

use super::{num, Outputs};
use crate::config::{check_composite, positive, ConfigError};
use crate::manifest::RunManifest;
use crate::table::Table;
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub composite: CompositeSpec,
    pub scan: ClassicalScan,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            composite: CompositeSpec {
                env_mass: 1.0,
                sys_mass: 1.0,
                hbar: 1.0,
                energy: 0.0,
                clock_energy: None,
                v_env: Potential::zero(),
                v_sys: Potential::harmonic(1.0),
                v_int: Coupling::Bilinear { lambda: 0.02 },
            },
            scan: ClassicalScan {
                masses: vec![10.0, 100.0, 1000.0, 10_000.0],
                velocity: 1.0,
                r_start: -2.0,
                r_stop: 2.0,
                x0: 1.0,
                p0: 0.0,
                dt: 2e-4,
            },
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_composite(&self.composite, "/params/composite")?;
        if self.scan.masses.len() < 2 {
            return Err(ConfigError::new("/params/scan/masses", "need at least two masses"));
        }
        for (i, m) in self.scan.masses.iter().enumerate() {
            positive(*m, &format!("/params/scan/masses/{i}"))?;
        }
        positive(self.scan.velocity, "/params/scan/velocity")?;
        positive(self.scan.dt, "/params/scan/dt")?;
        if !(self.scan.r_stop > self.scan.r_start) {
            return Err(ConfigError::new("/params/scan/r_stop", "must exceed r_start"));
        }
        Ok(())
    }
}

pub fn run(p: &Params, m: &mut RunManifest) -> Result<Outputs, RunError> {
    let rep = m.stage("scan", || Ok(classical_emergence_compare(&p.composite, &p.scan)?))?;
    let mut t = Table::new(
        "classical_emergence",
        &[
            "mass",
            "clock_scale",
            "deviation",
            "neglected_ratio",
            "predicted_ratio",
            "energy_shift",
            "predicted_shift",
            "system_energy",
            "composite_drift",
            "slope_fit",
        ],
    );
    for q in &rep.points {
        t.push(vec![
            q.mass.into(),
            q.clock_scale.into(),
            q.deviation.into(),
            q.neglected_ratio.into(),
            q.predicted_ratio.into(),
            q.energy_shift.into(),
            q.predicted_shift.into(),
            q.system_energy.into(),
            q.composite_drift.into(),
            rep.slope.into(),
        ]);
    }
    let mut out = Outputs::default();
    out.tables.push(t);
    out.note("slope", num(rep.slope));
    out.note("monotone", rep.monotone);
    if let Some(h) = rep.points.last() {
        out.note("energy_shift_relative_error", num((h.energy_shift - h.predicted_shift) / h.predicted_shift));
    }
    Ok(out)
}
