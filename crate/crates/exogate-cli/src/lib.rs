//! Operator entry point for exoskeleton control scenarios.
//!
//! Subcommands: `validate` a scenario file, `run` one scenario to its
//! artifact set (`log.csv`, `metrics.json`, `events.json`, plus the shadow
//! trace and the perception stream), `sweep` a parameter grid, and `replay` a
//! run from a recorded frame stream. Exit codes are stable: 0 success, 1
//! validation failure, 2 runtime abort.

pub mod diag;
pub mod overrides;
pub mod runfiles;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use exogate_core::simkit::Scenario;
use exogate_core::visiongate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "exogate",
    about = "Vision-gated exoskeleton controller simulation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a scenario file against the schema and all invariants.
    Validate {
        /// Scenario JSON path.
        scenario: PathBuf,
    },
    /// Run one scenario and write its artifacts.
    Run {
        /// Scenario JSON path.
        scenario: PathBuf,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Run a Cartesian parameter sweep described by a sweep spec file.
    Sweep {
        /// Sweep spec JSON path.
        spec: PathBuf,
        /// Output directory, one subdirectory per grid point (falls back to
        /// the spec's own out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid-size cap; larger sweeps are refused unless raised.
        #[arg(long, default_value_t = 10_000)]
        max_points: usize,
        /// Dotted-path overrides applied to the base scenario of every point.
        #[arg(long = "set", value_name = "KEY.PATH=VALUE")]
        set: Vec<String>,
    },
    /// Re-run a scenario from a recorded perception stream.
    Replay {
        /// Scenario JSON path.
        scenario: PathBuf,
        /// Recorded line-delimited frame stream.
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        opts: RunArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the perception seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted-path overrides, e.g. --set policy.assist_scale=0.5. Last write
    /// wins; every override is recorded in metrics.json provenance.
    #[arg(long = "set", value_name = "KEY.PATH=VALUE")]
    pub set: Vec<String>,
    /// Force the gate low: posture-only assistance.
    #[arg(long)]
    pub no_vision: bool,
    /// Force zero assistive torque: unpowered device.
    #[arg(long)]
    pub no_exo: bool,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<exogate_core::Error> for CliError {
    fn from(e: exogate_core::Error) -> Self {
        match e {
            exogate_core::Error::SimAbort { .. } => CliError::runtime(e.to_string()),
            exogate_core::Error::Io(_) => CliError::runtime(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Run { scenario, opts } => runfiles::cmd_run(&scenario, &opts, None),
        Command::Sweep {
            spec,
            out,
            max_points,
            set,
        } => sweep::cmd_sweep(&spec, out.as_deref(), max_points, &set),
        Command::Replay {
            scenario,
            frames,
            opts,
        } => {
            let file = std::fs::File::open(&frames)
                .map_err(|e| CliError::validation(format!("{}: {e}", frames.display())))?;
            let recorded = visiongate::read_frames(std::io::BufReader::new(file))
                .map_err(|e| CliError::validation(format!("{}: {e}", frames.display())))?;
            runfiles::cmd_run(&scenario, &opts, Some(recorded))
        }
    }
}

fn cmd_validate(path: &std::path::Path) -> Result<(), CliError> {
    let scenario = load_scenario(path)?;
    let violations = scenario.violations();
    if violations.is_empty() {
        println!("OK: {} is valid", path.display());
        Ok(())
    } else {
        let mut message = format!("{}: {} violation(s)\n", path.display(), violations.len());
        for v in &violations {
            message.push_str(&format!("  - {v}\n"));
        }
        Err(CliError::validation(message.trim_end().to_string()))
    }
}

/// Loads and parses a scenario file; parse failures keep serde's line/column
/// context.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Parses, patches (overrides + seed), re-validates, and returns both the
/// scenario and the override strings actually applied.
pub fn load_patched_scenario(
    path: &std::path::Path,
    set: &[String],
    seed: Option<u64>,
) -> Result<(Scenario, Vec<String>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;

    let mut applied = Vec::new();
    for assignment in set {
        overrides::apply_assignment(&mut doc, assignment).map_err(CliError::validation)?;
        applied.push(assignment.clone());
    }
    if let Some(seed) = seed {
        let assignment = format!("perception.seed={seed}");
        overrides::apply_assignment(&mut doc, &assignment).map_err(CliError::validation)?;
        applied.push(assignment);
    }

    let scenario: Scenario = serde_json::from_value(doc)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let violations = scenario.violations();
    if !violations.is_empty() {
        let mut message = format!("{}: {} violation(s)\n", path.display(), violations.len());
        for v in &violations {
            message.push_str(&format!("  - {v}\n"));
        }
        return Err(CliError::validation(message.trim_end().to_string()));
    }
    Ok((scenario, applied))
}
