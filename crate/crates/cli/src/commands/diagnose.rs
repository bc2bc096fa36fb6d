use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use mr_regger::estimators::{attenuation_diagnostics, post_selection_diagnostics};
use mr_regger::ingest::{read_harmonized_tsv, to_dataset};
use mr_regger::model::strength_diagnostics;
use mr_regger::selection::{pvalue_to_lambda, select_random, SelectionConfig, DEFAULT_ETA};

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Harmonized TSV produced by `mr-regger harmonize`.
    #[arg(long)]
    input: PathBuf,
    /// Selection p-value threshold for the post-selection diagnostics.
    #[arg(long, default_value_t = 5e-5)]
    pthreshold: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

pub fn run(args: DiagnoseArgs) -> Result<i32> {
    let rows = read_harmonized_tsv(&args.input)?;
    let ds = to_dataset(&rows, format!("harmonized file {}", args.input.display()));
    println!("n_snps={}", ds.len());

    let gammas: Vec<f64> = ds.snps().iter().map(|s| s.gamma_hat).collect();
    let sigmas: Vec<f64> = ds.snps().iter().map(|s| s.sigma_x).collect();
    match strength_diagnostics(&gammas, &sigmas) {
        Ok(s) => {
            println!("kappa={}", s.kappa);
            println!("psi={}", s.psi);
        }
        Err(e) => eprintln!("strength diagnostics unavailable: {e}"),
    }
    match attenuation_diagnostics(&ds) {
        Ok(a) => {
            println!("attenuation_ratio={}", a.ratio);
            println!("i2_gx={}", a.i2_gx);
            if a.i2_gx < 0.9 {
                eprintln!(
                    "warning: i2_gx={:.3} < 0.9; classic Egger estimates are attenuated, \
                     prefer the debiased variants",
                    a.i2_gx
                );
            }
        }
        Err(e) => eprintln!("attenuation diagnostics unavailable: {e}"),
    }

    let lambda = pvalue_to_lambda(args.pthreshold)?;
    let cfg = SelectionConfig::new(lambda, args.eta, args.seed)?;
    let records = select_random(&ds, &cfg)?;
    println!("lambda={lambda}");
    println!("n_selected={}", records.len());
    match post_selection_diagnostics(&records, lambda) {
        Ok(p) => {
            println!("kappa_lambda={}", p.kappa_lambda);
            println!("psi_lambda={}", p.psi_lambda);
            println!("ess_rb={}", p.ess_rb);
            if p.ess_rb < 20.0 {
                eprintln!(
                    "warning: ess_rb={:.1} < 20; rerandomized estimates may be unstable",
                    p.ess_rb
                );
            }
        }
        Err(e) => eprintln!("post-selection diagnostics unavailable: {e}"),
    }
    Ok(0)
}
