use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use mr_regger::estimators::{degger, divw, egger, ivw, regger, rivw, EstimateReport, Method};
use mr_regger::ingest::{read_harmonized_tsv, to_dataset};
use mr_regger::model::validate_dataset;
use mr_regger::report::{to_key_value, SCHEMA_VERSION};
use mr_regger::selection::{pvalue_to_lambda, select_random, SelectionConfig, DEFAULT_ETA};
use mr_regger::SummaryDataset;

use crate::commands::na_or;
use crate::manifest::RunManifest;

/// Conventional fixed |z| threshold, approximately P < 5×10⁻⁸.
const DEFAULT_LAMBDA_FIXED: f64 = 5.4513;

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Harmonized TSV produced by `mr-regger harmonize`.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated methods to run.
    #[arg(long, default_value = "ivw,divw,rivw,egger,degger,regger")]
    methods: String,
    /// Two-sided p-value threshold for rerandomized selection (RIVW/REgger).
    #[arg(long, default_value_t = 5e-5)]
    pthreshold: f64,
    /// Pseudo-noise SD for rerandomized selection.
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// RNG seed for the selection noise.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fixed |z| cutoff applied to IVW/dIVW/Egger/dEgger before estimation.
    #[arg(long, default_value_t = DEFAULT_LAMBDA_FIXED)]
    lambda_fixed: f64,
    /// Run the fixed-threshold baselines on the full dataset instead.
    #[arg(long)]
    no_select: bool,
}

#[derive(Debug, Serialize)]
struct MethodFailure {
    method: Method,
    error: String,
}

#[derive(Debug, Serialize)]
struct EstimateRun {
    schema: &'static str,
    input: String,
    n_snps_input: usize,
    selection: SelectionEcho,
    fixed_threshold: Option<f64>,
    reports: Vec<EstimateReport>,
    failures: Vec<MethodFailure>,
}

#[derive(Debug, Serialize)]
struct SelectionEcho {
    pthreshold: f64,
    lambda: f64,
    eta: f64,
    seed: u64,
    n_selected: usize,
}

pub fn run(args: EstimateArgs) -> Result<i32> {
    let methods = parse_methods(&args.methods)?;
    let rows = read_harmonized_tsv(&args.input)?;
    let ds = to_dataset(&rows, format!("harmonized file {}", args.input.display()));
    for finding in validate_dataset(&ds) {
        eprintln!("warning: {}: {}", finding.snp_id, finding.reason);
    }

    let lambda = pvalue_to_lambda(args.pthreshold)?;
    let needs_selection = methods.iter().any(Method::uses_rerandomized_selection);
    let (records, n_selected) = if needs_selection {
        let cfg = SelectionConfig::new(lambda, args.eta, args.seed)?;
        let records = select_random(&ds, &cfg)?;
        let n = records.len();
        (records, n)
    } else {
        (Vec::new(), 0)
    };
    let fixed: Option<SummaryDataset> = if args.no_select {
        None
    } else {
        Some(ds.filtered(|s| (s.gamma_hat / s.sigma_x).abs() > args.lambda_fixed))
    };
    let baseline = fixed.as_ref().unwrap_or(&ds);

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for method in &methods {
        let result = match method {
            Method::Ivw => ivw(baseline),
            Method::Divw => divw(baseline),
            Method::Egger => egger(baseline),
            Method::Degger => degger(baseline),
            Method::Rivw => rivw(&records, lambda),
            Method::Regger => regger(&records, lambda),
        };
        match result {
            Ok(report) => {
                print!("{}", to_key_value(&report));
                println!();
                reports.push(report);
            }
            Err(err) => {
                eprintln!("method {method} failed: {err}");
                failures.push(MethodFailure {
                    method: *method,
                    error: err.to_string(),
                });
            }
        }
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let run = EstimateRun {
        schema: SCHEMA_VERSION,
        input: args.input.display().to_string(),
        n_snps_input: ds.len(),
        selection: SelectionEcho {
            pthreshold: args.pthreshold,
            lambda,
            eta: args.eta,
            seed: args.seed,
            n_selected,
        },
        fixed_threshold: if args.no_select {
            None
        } else {
            Some(args.lambda_fixed)
        },
        reports,
        failures,
    };
    std::fs::write(
        args.out.join("reports.json"),
        serde_json::to_string_pretty(&run)? + "\n",
    )?;
    write_reports_tsv(&run.reports, &args.out.join("reports.tsv"))?;

    let mut manifest = RunManifest::new(serde_json::json!({
        "command": "estimate",
        "methods": methods.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "pthreshold": args.pthreshold,
        "eta": args.eta,
        "no_select": args.no_select,
        "lambda_fixed": if args.no_select { None } else { Some(args.lambda_fixed) },
    }));
    manifest.seed = Some(args.seed);
    manifest.lambda = Some(lambda);
    manifest.digest_input(&args.input)?;
    manifest.write(&args.out)?;

    if run.reports.is_empty() {
        Ok(1)
    } else {
        Ok(0)
    }
}

fn parse_methods(spec: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for name in spec.split(',') {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        let m: Method = name
            .parse()
            .map_err(|e: String| anyhow::anyhow!(e))
            .with_context(|| format!("in --methods {spec:?}"))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    anyhow::ensure!(!methods.is_empty(), "no methods requested");
    Ok(methods)
}

fn write_reports_tsv(reports: &[EstimateReport], path: &PathBuf) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "method\tbeta_hat\tse_beta\tci95_lo\tci95_hi\tmu_alpha_hat\tse_mu_alpha\tpleiotropy_z\t\
         pleiotropy_p\tn_snps_used\tkappa\tpsi\tattenuation_ratio\ti2_gx\tess_rb"
    )?;
    for r in reports {
        let (lo, hi) = r.ci_95();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.method,
            r.beta_hat,
            r.se_beta,
            lo,
            hi,
            na_or(r.mu_alpha_hat),
            na_or(r.se_mu_alpha),
            na_or(r.pleiotropy_z),
            na_or(r.pleiotropy_p),
            r.n_snps_used,
            r.diagnostics.strength.kappa,
            r.diagnostics.strength.psi,
            na_or(r.diagnostics.attenuation_ratio),
            na_or(r.diagnostics.i2_gx),
            na_or(r.diagnostics.ess_rb),
        )?;
    }
    Ok(())
}
