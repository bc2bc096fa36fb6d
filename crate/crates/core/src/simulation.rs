//! Mixture-model data generator and seeded Monte Carlo studies.
//!
//! Summary statistics are generated directly: per SNP the true effects
//! (γ_j, α_j) come from a four-component mixture (valid, pleiotropic,
//! outcome-only, null), then γ̂_j ~ N(γ_j, 1/n_X) and Γ̂_j ~ N(βγ_j + α_j,
//! 1/n_Y). Every draw comes from a ChaCha stream keyed by (seed, repetition,
//! SNP index), so datasets are byte-identical across runs and thread counts,
//! and all methods inside one repetition see the same data.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{degger, divw, egger, ivw, regger, rivw, EstimateReport, Method};
use crate::math::KahanSum;
use crate::model::{SummaryDataset, TrueEffects};
use crate::selection::{derive_seed, select_random, stream_rng, SelectionConfig};

/// Parameters of the mixture data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Total number of independent SNPs.
    pub p: usize,
    /// Exposure GWAS sample size; σ_X = 1/√n_x for every SNP.
    pub n_x: u64,
    /// Outcome GWAS sample size; σ_Y = 1/√n_y for every SNP.
    pub n_y: u64,
    /// True causal effect.
    pub beta: f64,
    pub mu_gamma: f64,
    pub mu_alpha: f64,
    /// Variance of the exposure-effect component.
    pub eps_x_sq: f64,
    /// Variance of the pleiotropy component.
    pub eps_alpha_sq: f64,
    /// Proportion of valid instruments (exposure only).
    pub pi1: f64,
    /// Proportion of pleiotropic instruments (exposure and outcome).
    pub pi2: f64,
    /// Proportion of outcome-only SNPs.
    pub pi3: f64,
    /// Fraction of SNPs whose coding is randomly flipped after generation.
    pub flip_fraction: f64,
    pub seed: u64,
    pub reps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        // desk-scale midpoint of the benchmark sweep
        SimConfig {
            p: 20_000,
            n_x: 200_000,
            n_y: 200_000,
            beta: 0.2,
            mu_gamma: 0.001,
            mu_alpha: 0.005,
            eps_x_sq: 1e-4,
            eps_alpha_sq: 1e-4,
            pi1: 0.005,
            pi2: 0.005,
            pi3: 0.005,
            flip_fraction: 0.0,
            seed: 20_240_501,
            reps: 200,
        }
    }
}

impl SimConfig {
    pub fn sigma_x(&self) -> f64 {
        1.0 / (self.n_x as f64).sqrt()
    }

    pub fn sigma_y(&self) -> f64 {
        1.0 / (self.n_y as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p > u32::MAX as usize {
            return Err(Error::InvalidParam(format!("p out of range: {}", self.p)));
        }
        if self.n_x == 0 || self.n_y == 0 {
            return Err(Error::InvalidParam("sample sizes must be positive".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParam("reps must be positive".into()));
        }
        for (name, v) in [
            ("pi1", self.pi1),
            ("pi2", self.pi2),
            ("pi3", self.pi3),
            ("flip_fraction", self.flip_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParam(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if self.pi1 + self.pi2 + self.pi3 > 1.0 + 1e-12 {
            return Err(Error::InvalidParam(format!(
                "mixture weights sum to {} > 1",
                self.pi1 + self.pi2 + self.pi3
            )));
        }
        if self.eps_x_sq < 0.0 || self.eps_alpha_sq < 0.0 {
            return Err(Error::InvalidParam("variance components must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Exposure and outcome heritability implied by a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Heritability {
    pub h2_x: f64,
    pub h2_y: f64,
}

/// h²_X = p(π₁+π₂)(μ_γ²+ε_x²); h²_Y = β²h²_X + p(π₂+π₃)(μ_α²+ε_α²).
pub fn heritability(cfg: &SimConfig) -> Heritability {
    let p = cfg.p as f64;
    let h2_x = p * (cfg.pi1 + cfg.pi2) * (cfg.mu_gamma * cfg.mu_gamma + cfg.eps_x_sq);
    let h2_y = cfg.beta * cfg.beta * h2_x
        + p * (cfg.pi2 + cfg.pi3) * (cfg.mu_alpha * cfg.mu_alpha + cfg.eps_alpha_sq);
    Heritability { h2_x, h2_y }
}

// Stream-domain tag: generator draws never share a stream with selection
// noise, which is drawn from the undecorated selection seed.
const GENERATOR_DOMAIN: u64 = 0x4d52_4745_4e45_5241;

/// One synthetic dataset with its ground truth, deterministic in
/// `(cfg.seed, rep_index)`.
pub fn generate(cfg: &SimConfig, rep_index: u32) -> Result<(SummaryDataset, TrueEffects)> {
    cfg.validate()?;
    let root = derive_seed(cfg.seed, GENERATOR_DOMAIN);
    let sx = cfg.sigma_x();
    let sy = cfg.sigma_y();
    let eps_x = cfg.eps_x_sq.sqrt();
    let eps_a = cfg.eps_alpha_sq.sqrt();

    let mut snps = Vec::with_capacity(cfg.p);
    let mut gamma = Vec::with_capacity(cfg.p);
    let mut alpha = Vec::with_capacity(cfg.p);
    for j in 0..cfg.p {
        let stream = ((rep_index as u64) << 32) | j as u64;
        let mut rng = stream_rng(root, stream);
        let u: f64 = rng.gen();
        let in_exposure = u < cfg.pi1 + cfg.pi2;
        let in_outcome = u >= cfg.pi1 && u < cfg.pi1 + cfg.pi2 + cfg.pi3;
        let mut g = 0.0;
        let mut a = 0.0;
        if in_exposure {
            g = cfg.mu_gamma + eps_x * rng.sample::<f64, _>(StandardNormal);
        }
        if in_outcome {
            a = cfg.mu_alpha + eps_a * rng.sample::<f64, _>(StandardNormal);
        }
        let mut gamma_hat = g + sx * rng.sample::<f64, _>(StandardNormal);
        let mut big_gamma_hat = cfg.beta * g + a + sy * rng.sample::<f64, _>(StandardNormal);
        if cfg.flip_fraction > 0.0 && rng.gen::<f64>() < cfg.flip_fraction {
            g = -g;
            a = -a;
            gamma_hat = -gamma_hat;
            big_gamma_hat = -big_gamma_hat;
        }
        gamma.push(g);
        alpha.push(a);
        snps.push(crate::model::SnpSummary {
            snp_id: format!("s{j}"),
            gamma_hat,
            sigma_x: sx,
            big_gamma_hat,
            sigma_y: sy,
        });
    }
    Ok((
        SummaryDataset::new(snps, format!("simulated seed={} rep={rep_index}", cfg.seed)),
        TrueEffects {
            gamma,
            alpha,
            beta: cfg.beta,
            mu_alpha: cfg.mu_alpha,
        },
    ))
}

/// How instruments are chosen before a method runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionRule {
    /// Use every SNP.
    None,
    /// Deterministic filter |γ̂/σ_X| > λ, the conventional selection.
    FixedThreshold { lambda: f64 },
    /// Rerandomized selection with Rao-Blackwell correction; the seed is
    /// re-derived per repetition so methods sharing a rule see the same draw.
    Rerandomized(SelectionConfig),
}

/// One estimator paired with its selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub selection: SelectionRule,
}

impl MethodSpec {
    pub fn validate(&self) -> Result<()> {
        let rerandomized = matches!(self.selection, SelectionRule::Rerandomized(_));
        if self.method.uses_rerandomized_selection() != rerandomized {
            return Err(Error::InvalidParam(format!(
                "{} requires {} selection",
                self.method,
                if self.method.uses_rerandomized_selection() {
                    "rerandomized"
                } else {
                    "none or fixed-threshold"
                }
            )));
        }
        Ok(())
    }
}

/// One repetition's outcome for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepEstimate {
    pub rep: u32,
    pub beta_hat: f64,
    pub se_beta: f64,
    /// Whether the 95% interval covered the true β.
    pub covered: bool,
    pub pleiotropy_p: Option<f64>,
    pub ess_rb: Option<f64>,
    pub n_used: usize,
}

/// Aggregated performance of one method over a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub method: Method,
    /// Successful repetitions entering the moments.
    pub n_reps: usize,
    pub n_failed: usize,
    /// (mean β̂ − β)/β, or the absolute bias when β = 0 (flagged below).
    pub relative_bias: f64,
    pub bias_is_absolute: bool,
    /// Monte Carlo standard deviation; missing with fewer than 2 reps.
    pub sd: Option<f64>,
    pub mean_se: f64,
    pub mse: f64,
    /// Empirical 95% coverage probability.
    pub cp: f64,
    /// Pleiotropy-test rejection rate at nominal 0.05 (Egger family only).
    pub rejection_rate: Option<f64>,
    pub mean_ess_rb: Option<f64>,
    pub mean_selected: f64,
    /// Set when more than 10% of repetitions failed.
    pub flagged: bool,
}

/// Everything recorded for one method in a study.
#[derive(Debug, Clone, Serialize)]
pub struct MethodStudy {
    pub spec: MethodSpec,
    pub metrics: MetricsReport,
    pub estimates: Vec<RepEstimate>,
    /// (repetition, error message) for excluded repetitions.
    pub failures: Vec<(u32, String)>,
}

fn run_method_once(
    spec: &MethodSpec,
    ds: &SummaryDataset,
    rep: u32,
) -> Result<EstimateReport> {
    match spec.selection {
        SelectionRule::None => dispatch_plain(spec.method, ds),
        SelectionRule::FixedThreshold { lambda } => {
            let filtered = ds.filtered(|s| (s.gamma_hat / s.sigma_x).abs() > lambda);
            dispatch_plain(spec.method, &filtered)
        }
        SelectionRule::Rerandomized(sc) => {
            let per_rep = sc.with_seed(derive_seed(sc.seed, rep as u64));
            let records = select_random(ds, &per_rep)?;
            match spec.method {
                Method::Rivw => rivw(&records, sc.lambda),
                Method::Regger => regger(&records, sc.lambda),
                _ => unreachable!("validated in MethodSpec::validate"),
            }
        }
    }
}

fn dispatch_plain(method: Method, ds: &SummaryDataset) -> Result<EstimateReport> {
    match method {
        Method::Ivw => ivw(ds),
        Method::Divw => divw(ds),
        Method::Egger => egger(ds),
        Method::Degger => degger(ds),
        Method::Rivw | Method::Regger => Err(Error::InvalidParam(
            "rerandomized methods need a rerandomized selection rule".into(),
        )),
    }
}

/// Runs the full Monte Carlo study: generate, select, estimate, aggregate.
///
/// Repetitions run in parallel; aggregation is an indexed reduction so the
/// output is independent of thread count. Failed repetitions are excluded
/// from the moments and counted; a method failing more than 10% of
/// repetitions is flagged.
pub fn run_study(cfg: &SimConfig, specs: &[MethodSpec]) -> Result<Vec<MethodStudy>> {
    cfg.validate()?;
    for spec in specs {
        spec.validate()?;
    }
    let per_rep: Vec<Vec<std::result::Result<RepEstimate, String>>> = (0..cfg.reps as u32)
        .into_par_iter()
        .map(|rep| {
            let (ds, _truth) = generate(cfg, rep).expect("config validated");
            specs
                .iter()
                .map(|spec| {
                    run_method_once(spec, &ds, rep)
                        .map(|report| RepEstimate {
                            rep,
                            beta_hat: report.beta_hat,
                            se_beta: report.se_beta,
                            covered: (report.beta_hat - cfg.beta).abs()
                                <= 1.96 * report.se_beta,
                            pleiotropy_p: report.pleiotropy_p,
                            ess_rb: report.diagnostics.ess_rb,
                            n_used: report.n_snps_used,
                        })
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    Ok(specs
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let mut estimates = Vec::with_capacity(cfg.reps);
            let mut failures = Vec::new();
            for (rep, row) in per_rep.iter().enumerate() {
                match &row[m] {
                    Ok(est) => estimates.push(est.clone()),
                    Err(msg) => failures.push((rep as u32, msg.clone())),
                }
            }
            let metrics = aggregate(spec.method, cfg, &estimates, failures.len());
            MethodStudy {
                spec: *spec,
                metrics,
                estimates,
                failures,
            }
        })
        .collect())
}

fn aggregate(
    method: Method,
    cfg: &SimConfig,
    estimates: &[RepEstimate],
    n_failed: usize,
) -> MetricsReport {
    let n = estimates.len();
    let flagged = n_failed as f64 > 0.1 * cfg.reps as f64;
    if n == 0 {
        return MetricsReport {
            method,
            n_reps: 0,
            n_failed,
            relative_bias: f64::NAN,
            bias_is_absolute: cfg.beta == 0.0,
            sd: None,
            mean_se: f64::NAN,
            mse: f64::NAN,
            cp: f64::NAN,
            rejection_rate: None,
            mean_ess_rb: None,
            mean_selected: f64::NAN,
            flagged: true,
        };
    }
    let nf = n as f64;
    let mean = kmean(estimates.iter().map(|e| e.beta_hat));
    let bias = mean - cfg.beta;
    let (relative_bias, bias_is_absolute) = if cfg.beta == 0.0 {
        (bias, true)
    } else {
        (bias / cfg.beta, false)
    };
    let sd = if n >= 2 {
        let ss = crate::math::kahan_sum(estimates.iter().map(|e| {
            let d = e.beta_hat - mean;
            d * d
        }));
        Some((ss / (nf - 1.0)).sqrt())
    } else {
        None
    };
    let mse = kmean(estimates.iter().map(|e| {
        let d = e.beta_hat - cfg.beta;
        d * d
    }));
    if let Some(sd) = sd {
        // mse = sd²·(n−1)/n + bias², up to roundoff
        debug_assert!({
            let recon = sd * sd * (nf - 1.0) / nf + bias * bias;
            (mse - recon).abs() <= 1e-9 * mse.max(1e-300)
        });
    }
    let mean_se = kmean(estimates.iter().map(|e| e.se_beta));
    let cp = estimates.iter().filter(|e| e.covered).count() as f64 / nf;
    let rejection_rate = if method.has_intercept() {
        let ps: Vec<f64> = estimates.iter().filter_map(|e| e.pleiotropy_p).collect();
        if ps.is_empty() {
            None
        } else {
            Some(ps.iter().filter(|&&p| p < 0.05).count() as f64 / ps.len() as f64)
        }
    } else {
        None
    };
    let mean_ess_rb = if method.uses_rerandomized_selection() {
        Some(kmean(estimates.iter().map(|e| e.ess_rb.unwrap_or(f64::NAN))))
    } else {
        None
    };
    let mean_selected = kmean(estimates.iter().map(|e| e.n_used as f64));
    MetricsReport {
        method,
        n_reps: n,
        n_failed,
        relative_bias,
        bias_is_absolute,
        sd,
        mean_se,
        mse,
        cp,
        rejection_rate,
        mean_ess_rb,
        mean_selected,
        flagged,
    }
}

fn kmean(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    let mut n = 0usize;
    for v in values {
        acc.add(v);
        n += 1;
    }
    acc.total() / n as f64
}
