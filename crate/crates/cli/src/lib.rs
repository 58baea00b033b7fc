//! Scenario runner: config validation, the builtin registry, pipelines and
//! bit-stable tabular outputs with a run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

pub mod config;
pub mod manifest;
pub mod scenarios;
pub mod table;

pub use config::{ConfigError, ScenarioConfig};
pub use manifest::RunManifest;
pub use scenarios::{Outputs, ScenarioKind};

/// Environment variable that overrides the output directory of a config.
pub const OUT_ENV: &str = "EMTIME_OUT";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(emergent_time::Error),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config-error",
            RunError::Numerical(_) => "numerical-error",
            RunError::Io(_) => "io-error",
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Numerical(e) => write!(f, "numerical error: {e}"),
            RunError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<emergent_time::Error> for RunError {
    fn from(e: emergent_time::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for scans; `None` uses every core.
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
    pub outputs: Option<Outputs>,
    pub error: Option<RunError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// `--out`, then `EMTIME_OUT`, then the config's `output_dir`, then
/// `emtime-out/<scenario>`.
pub fn resolve_out_dir(opts: &RunOptions, config: Option<&ScenarioConfig>) -> PathBuf {
    if let Some(o) = &opts.out {
        return o.clone();
    }
    if let Some(o) = std::env::var_os(OUT_ENV) {
        return PathBuf::from(o);
    }
    match config {
        Some(c) => c.output_dir.clone().unwrap_or_else(|| Path::new("emtime-out").join(c.scenario.name())),
        None => PathBuf::from("emtime-out"),
    }
}

/// Reads a config file, or takes a builtin scenario name.
pub fn load_config_text(arg: &str) -> Result<String, RunError> {
    let path = Path::new(arg);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())));
    }
    if let Some(kind) = ScenarioKind::from_name(arg) {
        return Ok(serde_json::to_string_pretty(&ScenarioConfig::builtin(kind).to_value()).expect("config serializes"));
    }
    Err(RunError::Io(format!("{arg}: no such file or builtin scenario")))
}

/// Parses and applies the `--seed` override.
pub fn parse_config(text: &str, opts: &RunOptions) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::parse(text)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Validates, runs and writes outputs. The manifest is written whenever the
/// output directory can be created, whatever happened before.
pub fn run_text(text: &str, opts: &RunOptions) -> RunOutcome {
    let parsed = parse_config(text, opts);
    let hash = match &parsed {
        Ok(c) => c.hash(),
        Err(_) => config::hex_digest(text.as_bytes()),
    };
    let out_dir = resolve_out_dir(opts, parsed.as_ref().ok());
    let mut manifest = RunManifest::new(hash);
    let mut outputs = None;
    let result = (|| -> Result<(), RunError> {
        let cfg = manifest.stage("config", || Ok(parsed?))?;
        manifest.scenario = Some(cfg.scenario.name().into());
        manifest.seed = Some(cfg.seed);
        std::fs::create_dir_all(&out_dir).map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;
        std::fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(&cfg.to_value()).expect("config serializes") + "\n")?;
        manifest.files.push("config.json".into());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs.unwrap_or(0))
            .build()
            .map_err(|e| RunError::Io(format!("worker pool: {e}")))?;
        let out = pool.install(|| cfg.params.run(cfg.seed, &mut manifest))?;
        let files = manifest.stage("write", || write_outputs(&out, &out_dir, opts.format))?;
        manifest.files.extend(files);
        outputs = Some(out);
        Ok(())
    })();
    manifest.finish(&result);
    let mut error = result.err();
    if std::fs::create_dir_all(&out_dir).is_ok() {
        if let Err(e) = manifest.write(&out_dir.join("manifest.json")) {
            let e = RunError::from(e);
            manifest.status = e.kind().into();
            manifest.exit_code = e.exit_code();
            error.get_or_insert(e);
        }
    }
    RunOutcome {
        manifest,
        out_dir,
        outputs,
        error,
    }
}

fn write_outputs(out: &Outputs, dir: &Path, format: Format) -> Result<Vec<String>, RunError> {
    let mut files = Vec::new();
    for t in &out.tables {
        let name = match format {
            Format::Csv => format!("{}.csv", t.name),
            Format::Json => format!("{}.json", t.name),
        };
        let path = dir.join(&name);
        match format {
            Format::Csv => t.write_csv(&path)?,
            Format::Json => t.write_json(&path)?,
        }
        files.push(name);
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(out.summary.clone())).expect("summary serializes") + "\n";
    std::fs::write(dir.join("summary.json"), text)?;
    files.push("summary.json".into());
    Ok(files)
}
