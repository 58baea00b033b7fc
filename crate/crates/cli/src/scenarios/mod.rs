//! The fixed scenario registry. Each scenario owns a parameter struct with
//! registry defaults; a config may override any subset of it.

use serde_json::Value;

use crate::config::{overlay, typed, ConfigError};
use crate::manifest::RunManifest;
use crate::table::Table;
use crate::RunError;

pub mod beam_on_atom;
pub mod classical_emergence;
pub mod emergence_scan;
pub mod jacobi_paths;
pub mod perfect_clock;
pub mod two_level;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    PerfectClock,
    HarmonicClockTwoLevel,
    BeamOnAtom,
    ClassicalEmergence,
    JacobiPaths,
    EmergenceScan,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::PerfectClock,
        ScenarioKind::HarmonicClockTwoLevel,
        ScenarioKind::BeamOnAtom,
        ScenarioKind::ClassicalEmergence,
        ScenarioKind::JacobiPaths,
        ScenarioKind::EmergenceScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PerfectClock => "perfect-clock",
            ScenarioKind::HarmonicClockTwoLevel => "harmonic-clock-two-level",
            ScenarioKind::BeamOnAtom => "beam-on-atom",
            ScenarioKind::ClassicalEmergence => "classical-emergence",
            ScenarioKind::JacobiPaths => "jacobi-paths",
            ScenarioKind::EmergenceScan => "emergence-scan",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::PerfectClock => "free clock: quantum time of a plane wave and of a real Gaussian",
            ScenarioKind::HarmonicClockTwoLevel => {
                "harmonic clock driving a truncated system: eigenstates, back-reaction, channel residuals, amplitude vs grid dynamics"
            }
            ScenarioKind::BeamOnAtom => "a beam particle passing a bound system: level populations and first-order transition estimates",
            ScenarioKind::ClassicalEmergence => "composite vs reduced classical trajectories over a clock-mass scan",
            ScenarioKind::JacobiPaths => "stationary Jacobi paths between fixed endpoints, with endpoint-momentum checks",
            ScenarioKind::EmergenceScan => "conditional-wavefunction residual and neglected-term ratio over a clock-mass scan",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn default_params(self) -> Params {
        match self {
            ScenarioKind::PerfectClock => Params::PerfectClock(Default::default()),
            ScenarioKind::HarmonicClockTwoLevel => Params::HarmonicClockTwoLevel(Default::default()),
            ScenarioKind::BeamOnAtom => Params::BeamOnAtom(Default::default()),
            ScenarioKind::ClassicalEmergence => Params::ClassicalEmergence(Default::default()),
            ScenarioKind::JacobiPaths => Params::JacobiPaths(Default::default()),
            ScenarioKind::EmergenceScan => Params::EmergenceScan(Default::default()),
        }
    }

    /// Missing keys take registry defaults; unknown keys are errors.
    pub fn parse_params(self, value: Value) -> Result<Params, ConfigError> {
        const AT: &str = "/params";
        let value = overlay(self.default_params().to_value(), value);
        Ok(match self {
            ScenarioKind::PerfectClock => Params::PerfectClock(typed(value, AT)?),
            ScenarioKind::HarmonicClockTwoLevel => Params::HarmonicClockTwoLevel(typed(value, AT)?),
            ScenarioKind::BeamOnAtom => Params::BeamOnAtom(typed(value, AT)?),
            ScenarioKind::ClassicalEmergence => Params::ClassicalEmergence(typed(value, AT)?),
            ScenarioKind::JacobiPaths => Params::JacobiPaths(typed(value, AT)?),
            ScenarioKind::EmergenceScan => Params::EmergenceScan(typed(value, AT)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    PerfectClock(perfect_clock::Params),
    HarmonicClockTwoLevel(two_level::Params),
    BeamOnAtom(beam_on_atom::Params),
    ClassicalEmergence(classical_emergence::Params),
    JacobiPaths(jacobi_paths::Params),
    EmergenceScan(emergence_scan::Params),
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Params::PerfectClock(p) => p.validate(),
            Params::HarmonicClockTwoLevel(p) => p.validate(),
            Params::BeamOnAtom(p) => p.validate(),
            Params::ClassicalEmergence(p) => p.validate(),
            Params::JacobiPaths(p) => p.validate(),
            Params::EmergenceScan(p) => p.validate(),
        }
    }

    pub fn to_value(&self) -> Value {
        use crate::config::to_value;
        match self {
            Params::PerfectClock(p) => to_value(p),
            Params::HarmonicClockTwoLevel(p) => to_value(p),
            Params::BeamOnAtom(p) => to_value(p),
            Params::ClassicalEmergence(p) => to_value(p),
            Params::JacobiPaths(p) => to_value(p),
            Params::EmergenceScan(p) => to_value(p),
        }
    }

    pub fn run(&self, seed: u64, manifest: &mut RunManifest) -> Result<Outputs, RunError> {
        match self {
            Params::PerfectClock(p) => perfect_clock::run(p, manifest),
            Params::HarmonicClockTwoLevel(p) => two_level::run(p, seed, manifest),
            Params::BeamOnAtom(p) => beam_on_atom::run(p, manifest),
            Params::ClassicalEmergence(p) => classical_emergence::run(p, manifest),
            Params::JacobiPaths(p) => jacobi_paths::run(p, manifest),
            Params::EmergenceScan(p) => emergence_scan::run(p, manifest),
        }
    }
}

/// Tables plus a flat map of headline numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub tables: Vec<Table>,
    pub summary: serde_json::Map<String, Value>,
}

impl Outputs {
    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Finite numbers go into the summary as numbers, others as strings.
pub(crate) fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(crate::table::format_float(v)))
}
