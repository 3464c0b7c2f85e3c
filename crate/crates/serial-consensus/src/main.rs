//! Thin CLI over the library: run scenario configs (or bundled presets),
//! validate configs, list presets, and run the randomized self-test suites.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use serial_consensus::error::Error;
use serial_consensus::harness;
use serial_consensus::scenario::{
    self, find_preset, load_config, parse_config, RunOptions, Scenario, PRESETS,
};

#[derive(Parser)]
#[command(
    name = "serial-consensus",
    version,
    about = "Consensus control experiments for vehicle formations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios in a config file (or a bundled preset by name).
    Run {
        /// Path to a scenario config, or the name of a bundled preset.
        config: String,
        /// Directory for output artifacts.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Override every scenario's sampling step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override every scenario's horizon.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Parse and validate a config (or bundled preset) without running it.
    Check {
        /// Path to a scenario config, or the name of a bundled preset.
        config: String,
    },
    /// List the bundled presets.
    Presets,
    /// Run the randomized verification suites.
    Selftest {
        /// Seed for the instance generators.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            dt,
            horizon,
        } => run(&config, RunOptions { out_dir, dt, horizon }),
        Command::Check { config } => check(&config),
        Command::Presets => {
            list_presets();
            Ok(())
        }
        Command::Selftest { seed } => selftest(seed),
    }
}

/// A config argument is either a file path or the name of a bundled preset.
fn resolve(config: &str) -> Result<Vec<Scenario>, Error> {
    let path = Path::new(config);
    if path.exists() {
        return load_config(path);
    }
    if let Some(preset) = find_preset(config) {
        return parse_config(preset.text, Path::new("."));
    }
    Err(Error::Config(format!(
        "`{config}` is neither an existing file nor a bundled preset \
         (see `serial-consensus presets`)"
    )))
}

fn run(config: &str, opts: RunOptions) -> Result<(), Error> {
    let scenarios = resolve(config)?;
    for s in &scenarios {
        scenario::validate(s)?;
    }

    let mut hard_failure: Option<String> = None;
    for s in &scenarios {
        let outcome = scenario::run_scenario(s, &opts)?;
        for row in &outcome.rows {
            println!("{}", row.summary_line());
            if let Some(err) = &row.error {
                hard_failure.get_or_insert(format!("{} N={}: {err}", row.scenario, row.n));
            }
        }
    }

    match hard_failure {
        Some(first) => Err(Error::NumericalFailure(format!(
            "one or more scenario sizes failed; first: {first}"
        ))),
        None => Ok(()),
    }
}

fn check(config: &str) -> Result<(), Error> {
    let scenarios = resolve(config)?;
    for s in &scenarios {
        scenario::validate(s)?;
        println!(
            "{}: ok ({} size{})",
            s.name(),
            s.sizes().len(),
            if s.sizes().len() == 1 { "" } else { "s" }
        );
    }
    Ok(())
}

fn list_presets() {
    for preset in PRESETS {
        println!("{:<20} {}", preset.name, preset.description);
    }
}

fn selftest(seed: u64) -> Result<(), Error> {
    println!("randomized verification suites (seed {seed})");
    let results = harness::run_all(seed);
    let mut failed = 0;
    for r in &results {
        println!("{}", r.line());
        if !r.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        Err(Error::NumericalFailure(format!(
            "{failed} of {} suites failed",
            results.len()
        )))
    } else {
        println!("all {} suites passed", results.len());
        Ok(())
    }
}
