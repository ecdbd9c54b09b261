use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use excursion_lab::geometry::oracle::run_mask_suite;
use excursion_lab::harness::plot::{clt_tsv, decay_tsv, lln_tsv, PlotKind};
use excursion_lab::harness::{
    read_decay_table, read_records, run_config_file, RunOptions, THREADS_ENV,
};
use excursion_lab::Error;

#[derive(Parser)]
#[command(
    name = "excursion-lab",
    version,
    about = "Excursion-set Monte Carlo experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, env = THREADS_ENV, default_value_t = 0)]
        threads: usize,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check labeling and Euler characteristic against brute-force oracles
    /// on random binary masks.
    OracleCheck {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Convert a records or decay CSV to TSV on stdout.
    PlotData {
        csv: PathBuf,
        #[arg(long, value_parser = ["lln", "clt", "decay"])]
        kind: String,
        /// Lattice dimension used to normalize by (2n)^d.
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config { .. } => ExitCode::from(2),
        Error::Resource { .. } => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn report(err: Error) -> ExitCode {
    match &err {
        Error::Resource {
            required_bytes,
            budget_bytes,
        } => eprintln!(
            "error: estimated memory {:.1} MiB exceeds the budget of {:.1} MiB (raise memory_budget_bytes or shrink n)",
            *required_bytes as f64 / 1048576.0,
            *budget_bytes as f64 / 1048576.0
        ),
        _ => eprintln!("error: {err}"),
    }
    exit_for(&err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            threads,
            out,
        } => match run_config_file(&config, &RunOptions { threads, out }) {
            Ok(result) => {
                for w in &result.warnings {
                    eprintln!("warning: {w}");
                }
                for f in &result.files {
                    println!("{}", result.out_dir.join(f).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => report(e),
        },
        Command::OracleCheck { trials, size, seed } => {
            let tally = run_mask_suite(trials, size, size, seed);
            println!(
                "trials={} size={size}x{size} label_failures={} euler_failures={} {}",
                tally.trials,
                tally.label_failures,
                tally.euler_failures,
                if tally.passed() { "PASS" } else { "FAIL" }
            );
            if tally.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::PlotData { csv, kind, dim } => {
            let run = || -> excursion_lab::Result<String> {
                let kind: PlotKind = kind.parse()?;
                let file = File::open(&csv)?;
                Ok(match kind {
                    PlotKind::Lln => lln_tsv(&read_records(file)?, dim),
                    PlotKind::Clt => clt_tsv(&read_records(file)?, dim),
                    PlotKind::Decay => decay_tsv(&read_decay_table(file)?),
                })
            };
            match run() {
                Ok(tsv) => {
                    let _ = io::stdout().write_all(tsv.as_bytes());
                    ExitCode::SUCCESS
                }
                Err(e) => report(e),
            }
        }
    }
}
