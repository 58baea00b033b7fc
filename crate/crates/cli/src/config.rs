//! Run configuration: one JSON document naming a scenario, a seed, an
//! optional output directory and scenario parameters.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use emergent_time::{CompositeSpec, Grid1D};

use crate::scenarios::{Params, ScenarioKind};

/// A schema or value error, located by a JSON pointer into the config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "config error at {at}: {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub params: Params,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Deserializes `value` and reports failures under `prefix`.
pub fn typed<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = format!("{prefix}{}", pointer_of(e.path()));
        ConfigError::new(pointer, e.inner().to_string())
    })
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| ConfigError::new(pointer_of(e.path()), e.inner().to_string()))?;
        let scenario = ScenarioKind::from_name(&raw.scenario)
            .ok_or_else(|| ConfigError::new("/scenario", format!("unknown scenario {:?}; see `emtime list`", raw.scenario)))?;
        let params = scenario.parse_params(raw.params.unwrap_or(Value::Object(Default::default())))?;
        params.validate()?;
        Ok(ScenarioConfig {
            scenario,
            seed: raw.seed,
            output_dir: raw.output_dir,
            params,
        })
    }

    /// The registry default for a scenario.
    pub fn builtin(scenario: ScenarioKind) -> Self {
        ScenarioConfig {
            scenario,
            seed: 0,
            output_dir: None,
            params: scenario.default_params(),
        }
    }

    /// The fully resolved config as a JSON value; object keys are sorted.
    pub fn to_value(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("scenario".into(), Value::String(self.scenario.name().into()));
        m.insert("seed".into(), Value::from(self.seed));
        if let Some(dir) = &self.output_dir {
            m.insert("output_dir".into(), Value::String(dir.display().to_string()));
        }
        m.insert("params".into(), self.params.to_value());
        Value::Object(m)
    }

    /// SHA-256 of the compact resolved config.
    pub fn hash(&self) -> String {
        hex_digest(serde_json::to_string(&self.to_value()).expect("config serializes").as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn positive(v: f64, pointer: &str) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(pointer, format!("must be positive, got {v}")))
    }
}

pub fn at_least(v: usize, min: usize, pointer: &str) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::new(pointer, format!("must be at least {min}, got {v}")))
    }
}

pub fn check_grid(g: &Grid1D, pointer: &str) -> Result<(), ConfigError> {
    g.validate().map_err(|e| ConfigError::new(pointer, e.to_string()))
}

pub fn check_composite(c: &CompositeSpec, pointer: &str) -> Result<(), ConfigError> {
    positive(c.env_mass, &format!("{pointer}/env_mass"))?;
    positive(c.sys_mass, &format!("{pointer}/sys_mass"))?;
    positive(c.hbar, &format!("{pointer}/hbar"))?;
    c.validate().map_err(|e| ConfigError::new(pointer, e.to_string()))
}

/// Serializes a parameter struct; parameter types always serialize.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("parameters serialize")
}

/// Overlays `user` on `base`. Objects merge key by key, except that a
/// tagged object whose `kind` differs replaces the base outright.
pub fn overlay(base: Value, user: Value) -> Value {
    match (base, user) {
        (Value::Object(mut b), Value::Object(u)) => {
            let retagged = matches!((b.get("kind"), u.get("kind")), (Some(x), Some(y)) if x != y);
            if retagged {
                return Value::Object(u);
            }
            for (k, v) in u {
                let merged = match b.remove(&k) {
                    Some(old) => overlay(old, v),
                    None => v,
                };
                b.insert(k, merged);
            }
            Value::Object(b)
        }
        (_, u) => u,
    }
}
