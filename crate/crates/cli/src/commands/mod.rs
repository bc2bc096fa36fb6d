mod diagnose;
mod estimate;
mod harmonize;
mod simulate;

use anyhow::Result;
use clap::Subcommand;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QC and harmonize an exposure/outcome GWAS pair into the canonical TSV.
    Harmonize(harmonize::HarmonizeArgs),
    /// Run MR estimators on a harmonized TSV.
    Estimate(estimate::EstimateArgs),
    /// Run seeded Monte Carlo benchmark studies.
    Simulate(simulate::SimulateArgs),
    /// Print instrument-strength diagnostics for a harmonized TSV.
    Diagnose(diagnose::DiagnoseArgs),
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Harmonize(args) => harmonize::run(args),
        Command::Estimate(args) => estimate::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Diagnose(args) => diagnose::run(args),
    }
}

/// "NA" for missing optional metric cells in TSV outputs.
pub(crate) fn na_or<T: std::fmt::Display>(value: Option<T>) -> String {
    match value {
        Some(v) => v.to_string(),
        None => "NA".into(),
    }
}

pub(crate) fn na_if_nan(value: f64) -> String {
    if value.is_nan() {
        "NA".into()
    } else {
        value.to_string()
    }
}
