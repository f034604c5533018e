//! Batch front door for the calibration library: configuration-driven
//! runs, posterior fusion, and frozen-seed reproduction of the bundled
//! studies. No interactive mode; every command reads files, writes files,
//! and exits.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error (unreadable
//! or malformed inputs, dimension mismatches), 3 numeric failure (tuning,
//! sampling, conditioning, or a failed golden check). Failures print a
//! single machine-readable JSON object to stderr.

mod artifacts;
mod calibrate;
mod combine;
mod config;
mod reproduce;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gibbscal",
    version,
    about = "Tempered-posterior calibration of imperfect simulation models"
)]
struct Cli {
    /// Worker threads for Monte-Carlo loops (0 uses all cores). Results
    /// do not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the calibration pipeline described by a TOML config file.
    Calibrate {
        /// Run configuration; data and output paths resolve relative to
        /// this file's directory.
        config: PathBuf,
        /// Override the root seed declared in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fuse per-experiment posterior summaries into a consensus.
    Combine {
        /// JSON manifest: {"summaries": ["summary-a.json", ...]} with
        /// paths relative to the manifest's directory.
        manifest: PathBuf,
        /// How subset posteriors were scaled.
        #[arg(long, default_value = "within-experiment",
              value_parser = ["within-experiment", "across-experiments"])]
        scaling: String,
        /// Fixed-point tolerance for the barycenter iteration.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Output directory.
        #[arg(long, default_value = "consensus-out")]
        out: PathBuf,
    },
    /// Re-run a bundled study with its frozen seed and write its report.
    Reproduce {
        /// One of: toy, simulation-table, ensemble-demo.
        target: String,
        /// Output directory.
        #[arg(long, default_value = "reproduce-out")]
        out: PathBuf,
        /// Compare the fresh results against the shipped golden files and
        /// fail (exit 3) on any tolerance violation.
        #[arg(long)]
        check: bool,
        /// Monte-Carlo iterations for the simulation table (default 100).
        #[arg(long)]
        n_mc: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = match cli.command {
        Command::Calibrate { config, seed } => calibrate::run(&config, seed),
        Command::Combine { manifest, scaling, tol, out } => {
            combine::run(&manifest, &scaling, tol, &out)
        }
        Command::Reproduce { target, out, check, n_mc } => {
            reproduce::run(&target, &out, check, n_mc)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            let payload = serde_json::json!({
                "error": { "kind": kind, "exit_code": code, "message": e.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}

/// Maps the library failure taxonomy onto the documented exit codes.
fn classify(e: &gibbscal::Error) -> (u8, &'static str) {
    if e.is_config() {
        (1, "config")
    } else if e.is_data() {
        (2, "data")
    } else {
        (3, "numeric")
    }
}
