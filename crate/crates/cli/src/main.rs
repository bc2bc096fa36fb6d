//! `mr-regger` — two-sample Mendelian randomization from GWAS summary files.
//!
//! Subcommands: `harmonize` (QC + allele harmonization to the canonical
//! TSV), `estimate` (run the estimators on a harmonized file), `simulate`
//! (Monte Carlo benchmark studies), `diagnose` (instrument-strength report).
//!
//! Exit codes: 0 success, 1 all requested estimators failed, 2 invalid
//! input or configuration.

mod commands;
mod manifest;

use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "mr-regger", version, about = "Two-sample summary-data Mendelian randomization")]
struct Cli {
    /// Worker threads (default: MRREGGER_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: commands::Command,
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let code = match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("MRREGGER_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // a failure here means a pool already exists, which is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
