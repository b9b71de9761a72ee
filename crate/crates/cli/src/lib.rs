//! Config-driven runner: one TOML file describes one experiment, the run
//! writes CSV artifacts and a summary, and the exit status says whether
//! every declared tolerance held.

pub mod config;
pub mod run;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use plurirand_core::montecarlo::with_workers;

use crate::config::{validate, ExperimentConfig, Subcommand};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Worker count for the thread pool; nothing else is read from the
/// environment.
pub const WORKERS_ENV: &str = "PLURIRAND_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "plurirand", version, about = "Weighted extremal function and random polynomial experiments")]
pub struct Cli {
    /// extremal | zeros | weyl | expectation | lemma-check | mapping
    #[arg(value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<Subcommand>()))]
    pub command: Subcommand,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_workers(raw: Option<&str>) -> Result<Option<usize>, String> {
    match raw {
        None => Ok(None),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(format!("{WORKERS_ENV}: expected a positive integer, got `{s}`")),
        },
    }
}

/// Runs a parsed invocation; `workers` is the raw value of [`WORKERS_ENV`].
pub fn execute<O: Write, E: Write>(cli: &Cli, workers: Option<&str>, out: &mut O, err: &mut E) -> i32 {
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "invalid config: {e}");
            return EXIT_INVALID_CONFIG;
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.output_dir = cli.out.clone();
    }
    let violations = validate(cli.command, &cfg);
    if !violations.is_empty() {
        for v in &violations {
            let _ = writeln!(err, "invalid config: {v}");
        }
        return EXIT_INVALID_CONFIG;
    }
    let workers = match parse_workers(workers) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_INVALID_CONFIG;
        }
    };

    let outcome = match with_workers(workers, || run::run_experiment(cli.command, &cfg)) {
        Ok(Ok(o)) => o,
        Ok(Err(e)) | Err(e) => {
            let _ = writeln!(err, "{} failed: {e}", cli.command);
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID_CONFIG };
        }
    };
    for c in &outcome.report.checks {
        let _ = writeln!(
            out,
            "{} {}: {:e} {} {:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.threshold
        );
    }
    for f in &outcome.files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    if outcome.report.all_passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}
