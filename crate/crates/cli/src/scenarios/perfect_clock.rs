use serde::{Deserialize, Serialize};

use emergent_time::semiclassics::{perfect_clock, quantum_time};
use emergent_time::{ComplexField1D, Grid1D};

use super::{num, Outputs};
use crate::config::{check_grid, positive, ConfigError};
use crate::manifest::RunManifest;
use crate::table::{complex, Table};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub mass: f64,
    pub momentum: f64,
    pub hbar: f64,
    pub r_grid: Grid1D,
    pub gaussian: Gaussian,
}

/// `χ = exp(−R²/2w²)` on a window away from its stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gaussian {
    pub width: f64,
    pub r_grid: Grid1D,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            mass: 2.0,
            momentum: 3.0,
            hbar: 1.0,
            r_grid: Grid1D { min: 0.0, max: 10.0, n: 1001 },
            gaussian: Gaussian::default(),
        }
    }
}

impl Default for Gaussian {
    fn default() -> Self {
        Gaussian {
            width: 1.0,
            r_grid: Grid1D { min: 1.0, max: 2.0, n: 1001 },
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive(self.mass, "/params/mass")?;
        positive(self.hbar, "/params/hbar")?;
        if self.momentum == 0.0 || !self.momentum.is_finite() {
            return Err(ConfigError::new("/params/momentum", "must be finite and nonzero"));
        }
        check_grid(&self.r_grid, "/params/r_grid")?;
        positive(self.gaussian.width, "/params/gaussian/width")?;
        check_grid(&self.gaussian.r_grid, "/params/gaussian/r_grid")?;
        if self.gaussian.r_grid.min <= 0.0 {
            return Err(ConfigError::new("/params/gaussian/r_grid/min", "the Gaussian window must start at R > 0"));
        }
        Ok(())
    }
}

pub fn run(p: &Params, m: &mut RunManifest) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let clock = m.stage("clock", || Ok(perfect_clock(p.mass, p.momentum, p.r_grid, p.hbar)?))?;
    let tau = m.stage("quantum_time", || Ok(quantum_time(&clock.chi, p.mass, p.hbar)?))?;
    let mut table = Table::new("perfect_clock", &["r", "t_classical"]).complex_columns("tau");
    let mut worst: f64 = 0.0;
    for (i, (r, z)) in p.r_grid.points().iter().zip(&tau.tau).enumerate() {
        let t = clock.map.times[i];
        if i > 0 {
            worst = worst.max((z - t).norm() / t.abs());
        }
        let [re, im] = complex(*z);
        table.push(vec![(*r).into(), t.into(), re, im]);
    }
    out.tables.push(table);
    out.note("plane_wave_max_relative_error", num(worst));

    let g = &p.gaussian;
    let chi = ComplexField1D::from_real(g.r_grid, |r| (-r * r / (2.0 * g.width * g.width)).exp());
    let gtau = m.stage("gaussian_time", || Ok(quantum_time(&chi, p.mass, p.hbar)?))?;
    let scale = p.mass * g.width * g.width / p.hbar;
    let mut table = Table::new("gaussian_time", &["r"]).complex_columns("tau");
    table.columns.push("im_oracle".into());
    let mut worst: f64 = 0.0;
    for (r, z) in g.r_grid.points().iter().zip(&gtau.tau) {
        let oracle = -scale * (r / g.r_grid.min).ln();
        worst = worst.max(z.re.abs()).max((z.im - oracle).abs());
        let [re, im] = complex(*z);
        table.push(vec![(*r).into(), re, im, oracle.into()]);
    }
    out.tables.push(table);
    out.note("gaussian_max_error", num(worst));
    Ok(out)
}
