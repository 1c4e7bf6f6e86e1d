// SPDX-License-Identifier: Apache-2.0

//! Command-line runner: `run <config>`, `preset <name>`, `slopes <csv>`.

pub mod config;
pub mod plotdata;
pub mod presets;
pub mod runner;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, ExperimentKind, Issue};
pub use runner::{run_config, RunManifest};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "QUENCHCTL_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Every violated config field.
    Config(Vec<Issue>),
    Parse {
        path: PathBuf,
        message: String,
    },
    Io {
        path: PathBuf,
        message: String,
    },
    Input(String),
    /// A module failed mid-run; `params` names the sweep point.
    Runtime {
        module: String,
        params: String,
        source: crate::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// 2 for bad input, 1 for failures during computation or I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Parse { .. } | CliError::Input(_) => 2,
            CliError::Io { .. } | CliError::Runtime { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(issues) => {
                writeln!(f, "config validation failed ({} issue(s)):", issues.len())?;
                for issue in issues {
                    writeln!(f, "  - {issue}")?;
                }
                Ok(())
            }
            CliError::Parse { path, message } => {
                write!(f, "cannot parse {}: {message}", path.display())
            }
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Input(message) => f.write_str(message),
            CliError::Runtime {
                module,
                params,
                source,
            } => write!(f, "{module} failed ({params}): {source}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(
    name = "quenchctl",
    version,
    about = "Fast quenches across quantum phase transitions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in preset (`list` prints the names).
    Preset {
        name: String,
        /// Output directory (default `out/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset config instead of running it.
        #[arg(long)]
        print: bool,
    },
    /// Fit log-log slopes per series of a scaling CSV and write plot data.
    Slopes {
        csv: PathBuf,
        /// Directory for the `.dat` and `.slopes.txt` files (default: next to the CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Applies `QUENCHCTL_THREADS` to the global pool. Unset or empty leaves rayon's default.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    if value.trim().is_empty() {
        return Ok(());
    }
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            CliError::Input(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("{THREADS_ENV}: {e}")))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ExperimentConfig::from_toml(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let manifest = run_config(&cfg, &dir, None)?;
            Ok(summary(&manifest, &dir))
        }
        Command::Preset { name, out, print } => {
            if name == "list" {
                return Ok(presets::PRESETS
                    .iter()
                    .map(|p| format!("{:<6} {}\n", p.name, p.checks))
                    .collect());
            }
            let preset = presets::find(&name).ok_or_else(|| {
                let names: Vec<&str> = presets::PRESETS.iter().map(|p| p.name).collect();
                CliError::Input(format!(
                    "unknown preset `{name}`; available: {}",
                    names.join(", ")
                ))
            })?;
            if print {
                return Ok(preset.toml.to_string());
            }
            let cfg = preset.config();
            let dir = out.unwrap_or_else(|| Path::new("out").join(preset.name));
            let manifest = run_config(&cfg, &dir, Some(preset.name))?;
            Ok(summary(&manifest, &dir))
        }
        Command::Slopes { csv, out } => {
            let data = plotdata::emit_plotdata(&csv, out.as_deref())?;
            let mut text = plotdata::slopes_report(&data.series);
            for f in &data.files {
                text.push_str(&format!("# wrote {}\n", f.display()));
            }
            Ok(text)
        }
    }
}

fn summary(manifest: &RunManifest, dir: &Path) -> String {
    let mut text = format!(
        "{} run finished in {:.1} s; config hash {}\n",
        manifest.experiment,
        manifest.finished_unix - manifest.started_unix,
        &manifest.config_hash[..16]
    );
    for f in &manifest.outputs {
        text.push_str(&format!("  {}\n", dir.join(&f.path).display()));
    }
    text
}

/// Entry point of the `quenchctl` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| execute(cli));
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("error: {e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
