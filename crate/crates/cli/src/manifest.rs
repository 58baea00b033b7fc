use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Written for every run, including failed ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub status: String,
    pub exit_code: i32,
    pub stages: Vec<StageRecord>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        RunManifest {
            artifact: "emtime".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: None,
            seed: None,
            config_hash,
            status: "running".into(),
            exit_code: 0,
            stages: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Times `f` and records it as a stage.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, RunError>) -> Result<T, RunError> {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageRecord {
            name: name.into(),
            status: if out.is_ok() { "ok".into() } else { "failed".into() },
            seconds: start.elapsed().as_secs_f64(),
            error: out.as_ref().err().map(|e| e.to_string()),
        });
        out
    }

    pub fn finish(&mut self, result: &Result<(), RunError>) {
        match result {
            Ok(()) => {
                self.status = "ok".into();
                self.exit_code = 0;
            }
            Err(e) => {
                self.status = e.kind().into();
                self.exit_code = e.exit_code();
            }
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}
