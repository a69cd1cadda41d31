use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use marketsim::compare::Comparison;
use marketsim::{event_log_requested, execute, load, report, LoadError};

/// Deterministic multi-venue market simulator.
#[derive(Parser)]
#[command(name = "marketsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trades.csv, metrics.json and violations.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Config edit such as `venues[0].speed_bump_in_us=350`; repeatable.
        #[arg(long = "override", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a scenario with and without one config change and report the deltas.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_name = "PATH=VALUE")]
        toggle: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(2)
}

fn failure(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = event_log_requested();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            overrides,
        } => {
            let config = match load(&scenario, &overrides, seed) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let outcome = match execute(config, log) {
                Ok(o) => o,
                Err(e) => return config_error(e),
            };
            if let Err(e) = report::write_all(&out, &outcome) {
                return failure(e);
            }
            let m = &outcome.report.metrics;
            println!(
                "{}: seed {} trades {} volume {} violations {} trace {}",
                m.scenario,
                m.seed,
                m.trades,
                m.volume,
                outcome.report.violations.len(),
                outcome.trace_hash
            );
        }
        Command::Compare {
            scenario,
            seed,
            toggle,
            out,
        } => {
            let legs = load(&scenario, &[] as &[&str], Some(seed))
                .and_then(|a| Ok((a, load(&scenario, &[toggle.as_str()], Some(seed))?)));
            let (baseline, toggled) = match legs {
                Ok(l) => l,
                Err(e) => return config_error(e),
            };
            let cmp = match Comparison::run(baseline, toggled, log) {
                Ok(c) => c,
                Err(e) => return config_error(LoadError::from(e)),
            };
            if let Err(e) = cmp.write(&out, &toggle) {
                return failure(e);
            }
            print!("{}", cmp.table());
        }
    }
    ExitCode::SUCCESS
}
