//! Scenario loading, run execution and the report files behind the
//! `marketsim` command.

pub mod compare;
pub mod overrides;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use marketsim_core::monitors::{evaluate, MonitorReport};
use marketsim_core::scenario::{ConfigError, ScenarioConfig};
use marketsim_core::sim::{run, RunOptions, RunOutput};

pub use overrides::OverrideError;

/// Anything that stops a scenario from being run. All map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Override(#[from] OverrideError),
    /// The document parsed but describes an invalid scenario.
    #[error("{0}")]
    Invalid(#[from] ConfigError),
}

/// Reads a scenario, applies overrides and validates it.
pub fn load<S: AsRef<str>>(path: &Path, overrides: &[S], seed: Option<u64>) -> Result<ScenarioConfig, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Read {
        path: path.into(),
        source,
    })?;
    let parse_err = |e: serde_json::Error| LoadError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    overrides::apply(&mut doc, overrides)?;
    let mut config: ScenarioConfig = if overrides.is_empty() {
        // Parse the text itself so errors carry a real line number.
        serde_json::from_str(&text).map_err(parse_err)?
    } else {
        serde_json::from_value(doc).map_err(parse_err)?
    };
    if config.name.is_empty() {
        if let Some(stem) = path.file_stem() {
            config.name = stem.to_string_lossy().into_owned();
        }
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

/// A finished run with its audit.
pub struct Outcome {
    pub config: ScenarioConfig,
    pub output: RunOutput,
    pub report: MonitorReport,
    pub trace_hash: String,
}

/// Runs and audits a validated scenario.
pub fn execute(config: ScenarioConfig, event_log: bool) -> Result<Outcome, ConfigError> {
    let output = run(&config, RunOptions { event_log })?;
    let report = evaluate(&config, &output.trace);
    let trace_hash = report::trace_hash(&output.trace);
    Ok(Outcome {
        config,
        output,
        report,
        trace_hash,
    })
}

/// Whether `MARKETSIM_LOG` asks for an events log.
pub fn event_log_requested() -> bool {
    std::env::var("MARKETSIM_LOG").is_ok_and(|v| v.eq_ignore_ascii_case("events"))
}
