use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use emtime::{load_config_text, parse_config, run_text, Format, RunOptions, ScenarioKind};

#[derive(Parser)]
#[command(name = "emtime", version, about = "Run emergent-time scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (overrides the config and EMTIME_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a builtin scenario by name.
    Run { config: String },
    /// List builtin scenarios.
    List,
    /// Check a config without running it.
    Validate { config: String },
    /// Print the crate version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

fn list(format: Option<OutFormat>) {
    match format {
        None => {
            for k in ScenarioKind::ALL {
                println!("{:<26} {}", k.name(), k.description());
            }
        }
        Some(OutFormat::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["name", "description"]).ok();
            for k in ScenarioKind::ALL {
                w.write_record([k.name(), k.description()]).ok();
            }
            w.flush().ok();
        }
        Some(OutFormat::Json) => {
            let v: Vec<_> = ScenarioKind::ALL
                .iter()
                .map(|k| serde_json::json!({"name": k.name(), "description": k.description()}))
                .collect();
            println!("{}", serde_json::to_string_pretty(&v).expect("listing serializes"));
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        jobs: cli.jobs,
        out: cli.out,
        format: match cli.format {
            Some(OutFormat::Json) => Format::Json,
            _ => Format::Csv,
        },
        seed: cli.seed,
    };
    let code = match cli.command {
        Command::List => {
            list(cli.format);
            0
        }
        Command::Version => {
            println!("emtime {}", env!("CARGO_PKG_VERSION"));
            0
        }
        Command::Validate { config } => match load_config_text(&config) {
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
            Ok(text) => match parse_config(&text, &opts) {
                Ok(cfg) => {
                    println!("{} ok (config hash {})", cfg.scenario.name(), cfg.hash());
                    0
                }
                Err(e) => {
                    eprintln!("{e}");
                    2
                }
            },
        },
        Command::Run { config } => match load_config_text(&config) {
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
            Ok(text) => {
                let outcome = run_text(&text, &opts);
                for s in &outcome.manifest.stages {
                    eprintln!("[{}] {} ({:.3} s)", s.status, s.name, s.seconds);
                }
                if let Some(e) = &outcome.error {
                    eprintln!("{e}");
                }
                if let Some(out) = &outcome.outputs {
                    for (k, v) in &out.summary {
                        println!("{k} = {v}");
                    }
                }
                eprintln!("outputs in {}", outcome.out_dir.display());
                outcome.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
