use serde::{Deserialize, Serialize};

use emergent_time::classical::{endpoint_momentum_check, jacobi_path_minimize, path_momenta, JacobiOptions, Metric};
use emergent_time::{CompositeSpec, Coupling, Potential};

use super::{num, Outputs};
use crate::config::{at_least, check_composite, positive, ConfigError};
use crate::manifest::RunManifest;
use crate::table::Table;
use crate::RunError;

/// Paths live in `q = (R, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub composite: CompositeSpec,
    /// Weight the kinetic metric by `(M, m)` instead of the identity.
    pub mass_metric: bool,
    pub paths: Vec<PathSpec>,
    pub probe: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub segments: usize,
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
                v_int: Coupling::Bilinear { lambda: 0.1 },
            },
            mass_metric: false,
            paths: vec![
                PathSpec { start: [0.1, -0.2], end: [0.6, 0.3], segments: 24 },
                PathSpec { start: [-1.0, 0.0], end: [1.0, 0.5], segments: 32 },
            ],
            probe: 1e-2,
            tol: 1e-12,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_composite(&self.composite, "/params/composite")?;
        if self.paths.is_empty() {
            return Err(ConfigError::new("/params/paths", "need at least one path"));
        }
        for (i, p) in self.paths.iter().enumerate() {
            at_least(p.segments, 2, &format!("/params/paths/{i}/segments"))?;
            if p.start.iter().chain(&p.end).any(|v| !v.is_finite()) {
                return Err(ConfigError::new(format!("/params/paths/{i}"), "endpoints must be finite"));
            }
        }
        positive(self.probe, "/params/probe")?;
        positive(self.tol, "/params/tol")
    }
}

pub fn run(p: &Params, m: &mut RunManifest) -> Result<Outputs, RunError> {
    let spec = &p.composite;
    let metric = if p.mass_metric {
        Metric::Diagonal(vec![spec.env_mass, spec.sys_mass])
    } else {
        Metric::unit(2)
    };
    let opts = JacobiOptions { tol: p.tol, ..Default::default() };
    let mut points = Table::new("path_points", &["path", "k", "r", "x"]);
    let mut segments = Table::new("path_segments", &["path", "k", "p_r", "p_x", "constraint_residual"]);
    let mut ends = Table::new(
        "endpoints",
        &[
            "path",
            "action",
            "iterations",
            "gradient_norm",
            "fd_end_r",
            "fd_end_x",
            "p_end_r",
            "p_end_x",
            "end_error",
            "start_error",
            "max_constraint_residual",
        ],
    );
    let mut worst_constraint: f64 = 0.0;
    let mut worst_end: f64 = 0.0;
    for (i, ps) in p.paths.iter().enumerate() {
        let path = m.stage(&format!("path_{i}"), || Ok(jacobi_path_minimize(spec, &metric, &ps.start, &ps.end, spec.energy, ps.segments, &opts)?))?;
        let (mom, res) = path_momenta(spec, &path)?;
        for (k, q) in path.points.iter().enumerate() {
            points.push(vec![i.into(), k.into(), q[0].into(), q[1].into()]);
        }
        for (k, (pk, r)) in mom.iter().zip(&res).enumerate() {
            segments.push(vec![i.into(), k.into(), pk[0].into(), pk[1].into(), (*r).into()]);
        }
        let rep = m.stage(&format!("endpoint_{i}"), || {
            Ok(endpoint_momentum_check(spec, &metric, &ps.start, &ps.end, spec.energy, ps.segments, p.probe, &opts)?)
        })?;
        let max_c = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        worst_constraint = worst_constraint.max(max_c / spec.energy.abs());
        worst_end = worst_end.max(rep.end_error).max(rep.start_error);
        ends.push(vec![
            i.into(),
            path.action.into(),
            path.iterations.into(),
            path.gradient_norm.into(),
            rep.fd_end[0].into(),
            rep.fd_end[1].into(),
            rep.p_end[0].into(),
            rep.p_end[1].into(),
            rep.end_error.into(),
            rep.start_error.into(),
            max_c.into(),
        ]);
    }
    let mut out = Outputs::default();
    out.tables.extend([points, segments, ends]);
    out.note("max_relative_constraint_residual", num(worst_constraint));
    out.note("max_endpoint_error", num(worst_end));
    Ok(out)
}
