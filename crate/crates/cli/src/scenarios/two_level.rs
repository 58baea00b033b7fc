use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use emergent_time::classical::{clock_time_map, ClockModel};
use emergent_time::drive::{DrivenInteraction, Schedule};
use emergent_time::dynamics::{compare_amplitudes_vs_grid, propagate_amplitudes_with, TdseSystem};
use emergent_time::stationary::{
    assemble_tise, channel_project, close_coupled_residual, entanglement_spectrum, factorize_prescribed, marginal_amplitude,
    residual_psidef, solve_eigenpairs, system_eigenbasis, Stencil,
};
use emergent_time::{Complex64, CompositeSpec, Coupling, Grid1D, Grid2D, Potential};

use super::{linspace, num, Outputs};
use crate::config::{at_least, check_composite, check_grid, positive, ConfigError};
use crate::manifest::RunManifest;
use crate::table::{complex, Cell, Table};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub composite: CompositeSpec,
    pub clock: Clock,
    pub x_grid: Grid1D,
    pub channels: usize,
    pub samples: usize,
    pub grid_substeps: usize,
    pub ode_substeps: usize,
    pub stationary: Stationary,
    pub rabi: Rabi,
}

/// The classical clock that turns `R` into `t` for the driven system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Clock {
    pub energy: f64,
    pub r_grid: Grid1D,
}

/// Composite eigenstates on a 2D box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stationary {
    pub x_grid: Grid1D,
    pub r_grid: Grid1D,
    pub stencil: Stencil,
    pub states: usize,
    pub target: f64,
    /// Channel counts for the close-coupled residual study.
    pub channel_counts: Vec<usize>,
}

/// Two degenerate levels with a constant coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Rabi {
    pub level_energy: f64,
    pub coupling: f64,
    pub t_end: f64,
    pub samples: usize,
    pub substeps: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            composite: CompositeSpec {
                env_mass: 1.0,
                sys_mass: 1.0,
                hbar: 1.0,
                energy: 2.0,
                clock_energy: None,
                v_env: Potential::harmonic(1.0),
                v_sys: Potential::harmonic(1.0),
                v_int: Coupling::WindowedPulse {
                    amplitude: 0.05,
                    center: 0.0,
                    width: 0.3,
                    profile: Potential::Linear { slope: 1.0 },
                },
            },
            clock: Clock::default(),
            x_grid: Grid1D { min: -8.0, max: 8.0, n: 161 },
            channels: 2,
            samples: 41,
            grid_substeps: 100,
            ode_substeps: 100,
            stationary: Stationary::default(),
            rabi: Rabi::default(),
        }
    }
}

impl Default for Clock {
    fn default() -> Self {
        Clock {
            energy: 2.0,
            r_grid: Grid1D { min: -1.5, max: 1.5, n: 601 },
        }
    }
}

impl Default for Stationary {
    fn default() -> Self {
        Stationary {
            x_grid: Grid1D { min: -7.0, max: 7.0, n: 64 },
            r_grid: Grid1D { min: -7.0, max: 7.0, n: 64 },
            stencil: Stencil::SecondOrder,
            states: 4,
            target: 0.0,
            channel_counts: vec![2, 4, 8],
        }
    }
}

impl Default for Rabi {
    fn default() -> Self {
        Rabi {
            level_energy: 1.0,
            coupling: 0.1,
            t_end: 40.0,
            samples: 81,
            substeps: 50,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_composite(&self.composite, "/params/composite")?;
        positive(self.clock.energy, "/params/clock/energy")?;
        check_grid(&self.clock.r_grid, "/params/clock/r_grid")?;
        check_grid(&self.x_grid, "/params/x_grid")?;
        at_least(self.channels, 1, "/params/channels")?;
        at_least(self.samples, 2, "/params/samples")?;
        at_least(self.grid_substeps, 1, "/params/grid_substeps")?;
        at_least(self.ode_substeps, 1, "/params/ode_substeps")?;
        let s = &self.stationary;
        check_grid(&s.x_grid, "/params/stationary/x_grid")?;
        check_grid(&s.r_grid, "/params/stationary/r_grid")?;
        at_least(s.states, 1, "/params/stationary/states")?;
        for (i, k) in s.channel_counts.iter().enumerate() {
            at_least(*k, 1, &format!("/params/stationary/channel_counts/{i}"))?;
        }
        positive(self.rabi.t_end, "/params/rabi/t_end")?;
        at_least(self.rabi.samples, 2, "/params/rabi/samples")?;
        at_least(self.rabi.substeps, 1, "/params/rabi/substeps")?;
        Ok(())
    }
}

fn stationary(p: &Params, seed: u64, m: &mut RunManifest, out: &mut Outputs) -> Result<(), RunError> {
    let s = &p.stationary;
    let spec = &p.composite;
    let grid = Grid2D::new(s.x_grid, s.r_grid)?;
    let pairs = m.stage("eigenpairs", || {
        let h = assemble_tise(spec, grid, s.stencil)?;
        Ok(solve_eigenpairs(&h, s.target, s.states, seed)?)
    })?;
    let mut eig = Table::new(
        "eigenstates",
        &["index", "energy", "residual", "boundary_amplitude", "identity_error", "psidef_residual", "entanglement_defect"],
    );
    let mut worst_identity: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut ground_state = None;
    m.stage("factorize", || {
        for (i, pair) in pairs.iter().enumerate() {
            let st = factorize_prescribed(&pair.field, &marginal_amplitude(&pair.field), spec, s.stencil)?;
            let identity = st.product_identity_error(&pair.field);
            let psidef = residual_psidef(&st, spec, s.stencil)?.residual;
            let schmidt = entanglement_spectrum(&pair.field)?;
            worst_identity = worst_identity.max(identity);
            worst_residual = worst_residual.max(pair.residual / pair.energy.abs());
            eig.push(vec![
                i.into(),
                pair.energy.into(),
                pair.residual.into(),
                pair.field.boundary_amplitude().into(),
                identity.into(),
                psidef.into(),
                schmidt.entanglement_defect().into(),
            ]);
            if i == 0 {
                ground_state = Some(st);
            }
        }
        Ok(())
    })?;
    out.tables.push(eig);
    out.note("eigen_max_relative_residual", num(worst_residual));
    out.note("factorization_max_identity_error", num(worst_identity));
    if let Some(st) = ground_state {
        let mut t = Table::new("back_reaction", &["r"]).complex_columns("u_s");
        t.columns.push("psi_norm".into());
        for ((r, u), n) in st.window_r().iter().zip(&st.u_s).zip(&st.psi_norms) {
            let [re, im] = complex(*u);
            t.push(vec![(*r).into(), re, im, (*n).into()]);
        }
        out.tables.push(t);
    }

    let ground = &pairs[0];
    let kmax = s.channel_counts.iter().cloned().max().unwrap_or(1);
    let mut cc = Table::new("close_coupled", &["channels", "aggregate", "hermiticity", "defect"]);
    let mut aggregates = Vec::new();
    m.stage("close_coupled", || {
        let full = system_eigenbasis(spec, s.x_grid, kmax, s.stencil, None)?;
        for k in &s.channel_counts {
            let d = channel_project(&ground.field, &full.truncated(*k)?)?;
            let r = close_coupled_residual(&d, spec, ground.energy, s.stencil)?;
            cc.push(vec![(*k).into(), r.aggregate.into(), r.hermiticity.into(), d.defect.into()]);
            aggregates.push(r.aggregate);
        }
        Ok(())
    })?;
    out.tables.push(cc);
    if aggregates.len() >= 2 {
        out.note("close_coupled_drop", num(aggregates[0] / aggregates[aggregates.len() - 1]));
    }
    Ok(())
}

fn dynamics(p: &Params, m: &mut RunManifest, out: &mut Outputs) -> Result<(), RunError> {
    let spec = &p.composite;
    let clock = ClockModel::new(spec.v_env.clone(), spec.env_mass, p.clock.energy, p.clock.r_grid)?;
    let map = Arc::new(clock_time_map(&clock)?);
    let times = linspace(map.t_start(), map.t_end(), p.samples);
    let drive = DrivenInteraction::new(spec.v_int.clone(), Schedule::Clock(map.clone()));
    let sys = TdseSystem::new(&spec.v_sys, spec.sys_mass, spec.hbar, p.x_grid, drive)?;
    let cmp = m.stage("two_routes", || {
        let basis = system_eigenbasis(spec, p.x_grid, p.channels, Stencil::SecondOrder, None)?;
        let mut a0 = vec![Complex64::new(0.0, 0.0); p.channels];
        a0[0] = Complex64::new(1.0, 0.0);
        Ok(compare_amplitudes_vs_grid(&basis, &sys, &a0, &times, p.grid_substeps, p.ode_substeps)?)
    })?;
    let mut t = Table::new("amplitudes", &["t", "r"]);
    for k in 0..p.channels {
        t = t.complex_columns(&format!("a{k}")).complex_columns(&format!("grid{k}"));
    }
    for (i, time) in times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*time).into(), map.r_at(*time).into()];
        for k in 0..p.channels {
            row.extend(complex(cmp.amplitudes.amplitudes[i][k]));
            row.extend(complex(cmp.projected[i][k]));
        }
        t.push(row);
    }
    out.tables.push(t);
    out.note("route_max_deviation", num(cmp.max_deviation));
    out.note("route_initial_defect", num(cmp.initial_defect));
    out.note("route_population_drift", num(cmp.amplitudes.population_drift()));
    Ok(())
}

fn rabi(p: &Params, m: &mut RunManifest, out: &mut Outputs) -> Result<(), RunError> {
    let r = &p.rabi;
    let hbar = p.composite.hbar;
    let v = DMatrix::from_row_slice(2, 2, &[0.0, r.coupling, r.coupling, 0.0]).map(|x| Complex64::new(x, 0.0));
    let times = linspace(0.0, r.t_end, r.samples);
    let set = m.stage("rabi", || {
        let a0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        Ok(propagate_amplitudes_with(&[r.level_energy; 2], hbar, |_| Ok(v.clone()), &a0, &times, r.substeps)?)
    })?;
    let mut t = Table::new("rabi", &["t", "p1", "p2", "p2_oracle"]);
    let mut worst: f64 = 0.0;
    for (k, time) in times.iter().enumerate() {
        let pops = set.populations(k);
        let oracle = (r.coupling * time / hbar).sin().powi(2);
        worst = worst.max((pops[1] - oracle).abs());
        t.push(vec![(*time).into(), pops[0].into(), pops[1].into(), oracle.into()]);
    }
    out.tables.push(t);
    out.note("rabi_max_error", num(worst));
    out.note("rabi_population_drift", num(set.population_drift()));
    Ok(())
}

pub fn run(p: &Params, seed: u64, m: &mut RunManifest) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    stationary(p, seed, m, &mut out)?;
    dynamics(p, m, &mut out)?;
    rabi(p, m, &mut out)?;
    Ok(out)
}
