use serde::{Deserialize, Serialize};

use emergent_time::dynamics::{emergence_scan, EmergenceScan};
use emergent_time::{CompositeSpec, Coupling, Grid1D, Potential};

use super::{num, Outputs};
use crate::config::{at_least, check_composite, check_grid, positive, ConfigError};
use crate::manifest::RunManifest;
use crate::table::Table;
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub composite: CompositeSpec,
    pub scan: EmergenceScan,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            composite: CompositeSpec {
                env_mass: 1.0,
                sys_mass: 1.0,
                hbar: 1.0,
                energy: 1.0,
                clock_energy: None,
                v_env: Potential::zero(),
                v_sys: Potential::harmonic(1.0),
                v_int: Coupling::WindowedPulse {
                    amplitude: 0.2,
                    center: 5.0,
                    width: 1.0,
                    profile: Potential::Linear { slope: 1.0 },
                },
            },
            scan: EmergenceScan {
                masses: vec![20.0, 50.0, 100.0, 200.0, 600.0],
                velocity: 1.0,
                x_grid: Grid1D { min: -8.0, max: 8.0, n: 161 },
                r_grid: Grid1D { min: 0.0, max: 10.0, n: 2001 },
                channels: 8,
                substeps: 4,
            },
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_composite(&self.composite, "/params/composite")?;
        let s = &self.scan;
        if s.masses.len() < 3 {
            return Err(ConfigError::new("/params/scan/masses", "need at least three scan points"));
        }
        for (i, m) in s.masses.iter().enumerate() {
            positive(*m, &format!("/params/scan/masses/{i}"))?;
        }
        let (lo, hi) = s.masses.iter().fold((f64::MAX, 0.0f64), |(a, b), m| (a.min(*m), b.max(*m)));
        if hi < 30.0 * lo {
            return Err(ConfigError::new("/params/scan/masses", "the scan must span at least a factor 30"));
        }
        positive(s.velocity, "/params/scan/velocity")?;
        check_grid(&s.x_grid, "/params/scan/x_grid")?;
        check_grid(&s.r_grid, "/params/scan/r_grid")?;
        at_least(s.channels, 1, "/params/scan/channels")?;
        at_least(s.substeps, 1, "/params/scan/substeps")
    }
}

pub fn run(p: &Params, m: &mut RunManifest) -> Result<Outputs, RunError> {
    let rep = m.stage("scan", || Ok(emergence_scan(&p.composite, &p.scan)?))?;
    let mut t = Table::new(
        "emergence_scan",
        &[
            "mass",
            "scan_value",
            "residual",
            "rho",
            "rho_estimate",
            "velocity",
            "velocity_spread",
            "norm_variation",
            "slope_fit",
            "error",
        ],
    );
    for q in &rep.points {
        t.push(vec![
            q.mass.into(),
            q.scan_value.into(),
            q.residual.into(),
            q.rho.into(),
            q.rho_estimate.into(),
            q.velocity.into(),
            q.velocity_spread.into(),
            q.norm_variation.into(),
            rep.slope.into(),
            q.error.clone().unwrap_or_default().into(),
        ]);
    }
    let mut out = Outputs::default();
    out.tables.push(t);
    out.note("slope", num(rep.slope));
    out.note("monotone", rep.monotone);
    out.note("failed_points", rep.points.iter().filter(|q| q.error.is_some()).count());
    Ok(out)
}
