use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use mr_regger::estimators::Method;
use mr_regger::selection::{pvalue_to_lambda, SelectionConfig, DEFAULT_ETA};
use mr_regger::simulation::{
    heritability, run_study, MethodSpec, MethodStudy, SelectionRule, SimConfig,
};

use crate::commands::{na_if_nan, na_or};
use crate::manifest::RunManifest;

/// Conventional fixed |z| threshold for the non-rerandomized baselines.
const LAMBDA_FIXED: f64 = 5.4513;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in study: figure3-desk, null-beta, or ess-sweep.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON file with a single simulation configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override repetition count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override SNP count.
    #[arg(long)]
    snps: Option<usize>,
    /// Override base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run presets at publication scale (p=200000, reps=1000).
    #[arg(long)]
    paper_scale: bool,
}

struct SweepPoint {
    label: String,
    sweep_param: &'static str,
    sweep_value: f64,
    config: SimConfig,
}

fn default_methods(seed: u64) -> Result<Vec<MethodSpec>> {
    let lambda = pvalue_to_lambda(5e-5)?;
    let rerand = SelectionRule::Rerandomized(SelectionConfig::new(lambda, DEFAULT_ETA, seed)?);
    let fixed = SelectionRule::FixedThreshold {
        lambda: LAMBDA_FIXED,
    };
    Ok(vec![
        MethodSpec {
            method: Method::Divw,
            selection: fixed,
        },
        MethodSpec {
            method: Method::Degger,
            selection: fixed,
        },
        MethodSpec {
            method: Method::Rivw,
            selection: rerand,
        },
        MethodSpec {
            method: Method::Regger,
            selection: rerand,
        },
    ])
}

fn preset_points(name: &str, args: &SimulateArgs) -> Result<Vec<SweepPoint>> {
    let (p, reps) = if args.paper_scale {
        (200_000, 1_000)
    } else {
        (20_000, 200)
    };
    let p = args.snps.unwrap_or(p);
    let reps = args.reps.unwrap_or(reps);
    let seed = args.seed.unwrap_or(20_240_501);
    let base = SimConfig {
        p,
        reps,
        seed,
        ..SimConfig::default()
    };
    match name {
        "figure3-desk" | "null-beta" => {
            let beta = if name == "null-beta" { 0.0 } else { 0.2 };
            Ok((1..=10)
                .map(|i| {
                    let pi = i as f64 / 1000.0;
                    SweepPoint {
                        label: format!("pi{:.3}", pi),
                        sweep_param: "pi1",
                        sweep_value: pi,
                        config: SimConfig {
                            beta,
                            pi1: pi,
                            pi2: pi,
                            pi3: pi,
                            seed: seed.wrapping_add(i),
                            ..base
                        },
                    }
                })
                .collect())
        }
        "ess-sweep" => Ok((0..16)
            .map(|i| {
                let eps = 5e-6 + i as f64 * 1e-6;
                SweepPoint {
                    label: format!("epsx{:.0e}", eps),
                    sweep_param: "eps_x_sq",
                    sweep_value: eps,
                    config: SimConfig {
                        pi1: 1.0 / 3.0,
                        pi2: 1.0 / 3.0,
                        pi3: 1.0 / 3.0,
                        eps_x_sq: eps,
                        eps_alpha_sq: eps,
                        seed: seed.wrapping_add(i),
                        ..base
                    },
                }
            })
            .collect()),
        other => bail!("unknown preset {other:?} (want figure3-desk, null-beta, or ess-sweep)"),
    }
}

pub fn run(args: SimulateArgs) -> Result<i32> {
    let points = if let Some(preset) = &args.preset {
        preset_points(preset, &args)?
    } else if let Some(path) = &args.config {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let mut config: SimConfig =
            serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(reps) = args.reps {
            config.reps = reps;
        }
        if let Some(p) = args.snps {
            config.p = p;
        }
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        vec![SweepPoint {
            label: "custom".into(),
            sweep_param: "none",
            sweep_value: 0.0,
            config,
        }]
    } else {
        bail!("either --preset or --config is required");
    };

    for point in &points {
        point
            .config
            .validate()
            .map_err(|e| anyhow::anyhow!("config point {}: {e}", point.label))?;
        if point.config.reps == 1 {
            eprintln!(
                "warning: point {} has reps=1; the SD column will be empty",
                point.label
            );
        }
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut metrics = std::io::BufWriter::new(std::fs::File::create(args.out.join("metrics.tsv"))?);
    writeln!(
        metrics,
        "label\tsweep_param\tsweep_value\th2_x\th2_y\tmethod\tselection\tn_reps\tn_failed\t\
         relative_bias\tbias_is_absolute\tsd\tmean_se\tmse\tcp\trejection_rate\tmean_ess_rb\t\
         mean_selected\tflagged"
    )?;
    let mut per_rep = std::io::BufWriter::new(std::fs::File::create(args.out.join("per_rep.tsv"))?);
    writeln!(per_rep, "label\th2_x\tmethod\trep\tmetric\tvalue")?;

    for point in &points {
        let methods = default_methods(point.config.seed)?;
        let studies = run_study(&point.config, &methods)?;
        let h = heritability(&point.config);
        for study in &studies {
            write_metrics_row(&mut metrics, point, h.h2_x, h.h2_y, study)?;
            write_per_rep_rows(&mut per_rep, point, h.h2_x, study)?;
        }
        eprintln!("point {} done ({} methods)", point.label, studies.len());
    }
    drop(metrics);
    drop(per_rep);

    let mut manifest = RunManifest::new(serde_json::json!({
        "command": "simulate",
        "preset": args.preset,
        "config": args.config.as_ref().map(|p| p.display().to_string()),
        "points": points.iter().map(|p| serde_json::json!({
            "label": p.label,
            "config": p.config,
        })).collect::<Vec<_>>(),
    }));
    manifest.seed = args.seed;
    if let Some(path) = &args.config {
        manifest.digest_input(path)?;
    }
    manifest.write(&args.out)?;
    Ok(0)
}

fn selection_label(rule: &SelectionRule) -> String {
    match rule {
        SelectionRule::None => "none".into(),
        SelectionRule::FixedThreshold { lambda } => format!("fixed@{lambda}"),
        SelectionRule::Rerandomized(cfg) => format!("rerand@{:.4}", cfg.lambda),
    }
}

fn write_metrics_row(
    out: &mut impl Write,
    point: &SweepPoint,
    h2_x: f64,
    h2_y: f64,
    study: &MethodStudy,
) -> Result<()> {
    let m = &study.metrics;
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        point.label,
        point.sweep_param,
        point.sweep_value,
        h2_x,
        h2_y,
        m.method,
        selection_label(&study.spec.selection),
        m.n_reps,
        m.n_failed,
        na_if_nan(m.relative_bias),
        u8::from(m.bias_is_absolute),
        na_or(m.sd),
        na_if_nan(m.mean_se),
        na_if_nan(m.mse),
        na_if_nan(m.cp),
        na_or(m.rejection_rate),
        na_or(m.mean_ess_rb),
        na_if_nan(m.mean_selected),
        u8::from(m.flagged),
    )?;
    Ok(())
}

fn write_per_rep_rows(
    out: &mut impl Write,
    point: &SweepPoint,
    h2_x: f64,
    study: &MethodStudy,
) -> Result<()> {
    let method = study.metrics.method;
    for est in &study.estimates {
        let mut row = |metric: &str, value: String| {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                point.label, h2_x, method, est.rep, metric, value
            )
        };
        row("beta_hat", est.beta_hat.to_string())?;
        row("se_beta", est.se_beta.to_string())?;
        row("covered", u8::from(est.covered).to_string())?;
        if let Some(p) = est.pleiotropy_p {
            row("pleiotropy_p", p.to_string())?;
        }
        if let Some(ess) = est.ess_rb {
            row("ess_rb", ess.to_string())?;
        }
        row("n_selected", est.n_used.to_string())?;
    }
    Ok(())
}
