//! Library side of the `gphase` binary, kept separate so the experiment
//! drivers can be exercised without spawning a process.

pub mod args;
pub mod experiments;
pub mod output;
pub mod presets;

use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde_json::{json, Value};

use args::{Cli, Command, Format};
use experiments::Outcome;
use output::{config_hash, write_csv, write_json};
use presets::Preset;

#[derive(Debug)]
pub enum CliError {
    /// Parameters rejected before any computation (exit 3).
    Validation(String),
    /// A computation or I/O step failed (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

/// Runs the parsed command and writes its output. Returns the number of
/// failed sweep points.
pub fn run(cli: &Cli) -> Result<usize, CliError> {
    if cli.workers == 0 {
        return Err(CliError::Validation("--workers must be >= 1".into()));
    }
    let preset = cli.preset.map(presets::preset).unwrap_or_default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcome = pool.install(|| dispatch(&cli.command, &preset))?;
    let hash = config_hash(&outcome.config);
    emit(cli, &outcome, &hash)?;
    Ok(outcome.table.failures())
}

fn dispatch(cmd: &Command, p: &Preset) -> Result<Outcome, CliError> {
    match cmd {
        Command::Trace(a) => experiments::trace(a, p),
        Command::GpCurve(a) => experiments::gp_curve(a, p),
        Command::IsingSweep(a) => experiments::ising_sweep(a, p),
        Command::IsingApprox(a) => experiments::ising_approx(a, p),
        Command::TrotterCheck(a) => experiments::trotter_check(a, p),
        Command::Correction(a) => experiments::correction(a, p),
        Command::Presets => Ok(experiments::presets_table()),
    }
}

fn provenance(cli: &Cli, hash: &str) -> Value {
    let timestamp = if cli.timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        json!(secs)
    } else {
        Value::Null
    };
    json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "timestamp_unix": timestamp,
    })
}

fn emit(cli: &Cli, outcome: &Outcome, hash: &str) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Runtime(format!("writing output: {e}"));
    let sink: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(File::create(path).map_err(io_err)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match cli.format {
        Format::Csv => write_csv(&mut w, &outcome.table, hash).map_err(|e| CliError::Runtime(e.to_string()))?,
        Format::Json => write_json(&mut w, &outcome.table, &outcome.config, &provenance(cli, hash), hash).map_err(io_err)?,
    }
    w.flush().map_err(io_err)
}
