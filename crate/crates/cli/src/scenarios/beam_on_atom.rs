use serde::{Deserialize, Serialize};

use emergent_time::drive::{DrivenInteraction, Schedule};
use emergent_time::dynamics::{basis_energies, profile_matrix, propagate_tdse, TdseSystem};
use emergent_time::field::inner_product;
use emergent_time::stationary::{system_eigenbasis, Stencil};
use emergent_time::{Complex64, CompositeSpec, Coupling, Grid1D, Potential};

use super::{linspace, num, Outputs};
use crate::config::{at_least, check_grid, positive, ConfigError};
use crate::manifest::RunManifest;
use crate::table::{Cell, Table};
use crate::RunError;

/// A projectile moving at constant velocity (a perfect clock) past a bound
/// system; the interaction is `g(R) h(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub v_sys: Potential,
    pub sys_mass: f64,
    pub hbar: f64,
    pub coupling: Coupling,
    pub velocity: f64,
    pub r_start: f64,
    pub r_stop: f64,
    pub x_grid: Grid1D,
    pub levels: usize,
    pub samples: usize,
    pub substeps: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            v_sys: Potential::harmonic(1.0),
            sys_mass: 1.0,
            hbar: 1.0,
            coupling: Coupling::Separable {
                g: Potential::GaussianWell { depth: -0.1, width: 1.0, center: 0.0 },
                h: Potential::Linear { slope: 1.0 },
            },
            velocity: 2.0,
            r_start: -10.0,
            r_stop: 10.0,
            x_grid: Grid1D { min: -8.0, max: 8.0, n: 161 },
            levels: 4,
            samples: 101,
            substeps: 40,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.v_sys.validate().map_err(|e| ConfigError::new("/params/v_sys", e.to_string()))?;
        self.coupling.validate().map_err(|e| ConfigError::new("/params/coupling", e.to_string()))?;
        positive(self.sys_mass, "/params/sys_mass")?;
        positive(self.hbar, "/params/hbar")?;
        positive(self.velocity, "/params/velocity")?;
        if !(self.r_stop > self.r_start) {
            return Err(ConfigError::new("/params/r_stop", "must exceed r_start"));
        }
        check_grid(&self.x_grid, "/params/x_grid")?;
        at_least(self.levels, 1, "/params/levels")?;
        at_least(self.samples, 2, "/params/samples")?;
        at_least(self.substeps, 1, "/params/substeps")
    }
}

pub fn run(p: &Params, m: &mut RunManifest) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let spec = CompositeSpec {
        env_mass: 1.0,
        sys_mass: p.sys_mass,
        hbar: p.hbar,
        energy: 0.0,
        clock_energy: None,
        v_env: Potential::zero(),
        v_sys: p.v_sys.clone(),
        v_int: Coupling::Zero,
    };
    let basis = m.stage("levels", || Ok(system_eigenbasis(&spec, p.x_grid, p.levels, Stencil::SecondOrder, None)?))?;
    let energies = basis_energies(&basis)?;
    let drive = DrivenInteraction::new(p.coupling.clone(), Schedule::Uniform { r0: p.r_start, velocity: p.velocity });
    let sys = TdseSystem::new(&p.v_sys, p.sys_mass, p.hbar, p.x_grid, drive)?;
    let times = linspace(0.0, (p.r_stop - p.r_start) / p.velocity, p.samples);
    let traj = m.stage("propagate", || Ok(propagate_tdse(&sys, &basis.states[0], &times, p.substeps)?))?;

    let mut cols = vec!["t".to_string(), "r".to_string()];
    cols.extend((0..p.levels).map(|n| format!("p{n}")));
    cols.push("norm".into());
    let mut t = Table {
        name: "populations".into(),
        columns: cols,
        rows: Vec::new(),
    };
    let mut last = vec![0.0; p.levels];
    for (k, (time, state)) in times.iter().zip(&traj.states).enumerate() {
        let mut row: Vec<Cell> = vec![(*time).into(), sys.drive.schedule.r_at(*time).into()];
        for (n, phi) in basis.states.iter().enumerate() {
            let pop = inner_product(phi, state)?.norm_sqr();
            row.push(pop.into());
            if k + 1 == times.len() {
                last[n] = pop;
            }
        }
        row.push(traj.norms[k].into());
        t.push(row);
    }
    out.tables.push(t);

    // first order: |(1/ħ) ∫ ⟨n|h|0⟩ g(R(t)) exp(iω_n0 t) dt|², trapezoid on the fine grid
    let first = m.stage("first_order", || {
        let h = profile_matrix(&basis, &sys);
        let fine = linspace(times[0], times[times.len() - 1], (p.samples - 1) * p.substeps + 1);
        let dt = fine[1] - fine[0];
        let mut est = vec![0.0; p.levels];
        for (n, e) in est.iter_mut().enumerate() {
            let omega = (energies[n] - energies[0]) / p.hbar;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, t) in fine.iter().enumerate() {
                let w = if j == 0 || j + 1 == fine.len() { 0.5 } else { 1.0 };
                acc += Complex64::from_polar(w * sys.drive.r_factor(*t)?, omega * t);
            }
            *e = (h[(n, 0)] * acc * dt / p.hbar).norm_sqr();
        }
        Ok(est)
    })?;
    let mut tr = Table::new("transitions", &["level", "energy", "final_population", "first_order"]);
    for n in 0..p.levels {
        tr.push(vec![n.into(), energies[n].into(), last[n].into(), if n == 0 { f64::NAN } else { first[n] }.into()]);
    }
    out.tables.push(tr);
    out.note("norm_drift", num(traj.norm_drift()));
    out.note("excitation", num(1.0 - last[0]));
    if p.levels > 1 {
        out.note("p1_final", num(last[1]));
        out.note("p1_first_order", num(first[1]));
    }
    Ok(out)
}
