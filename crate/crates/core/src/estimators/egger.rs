//! Egger-family estimators: classic weighted regression, the measurement-error
//! debiased variant, and the rerandomized variant on Rao-Blackwell inputs.
//!
//! All three share the weighted covariance/variance decomposition
//!
//! ```text
//! θ̂₁ = S0·Σwγ̂Γ̂ − Σwγ̂·ΣwΓ̂        (weighted covariance, scaled)
//! θ̂₂ = S0·Σwγ̂² − (Σwγ̂)²            (weighted variance, scaled)
//! Δ  = S0·Σwσ_X² − Σw²σ_X²          (measurement-error inflation of θ̂₂)
//! ```
//!
//! Classic Egger divides θ̂₁ by θ̂₂ and is attenuated by the factor
//! θ₂/(θ₂+Δ); the debiased slope divides by θ̂₂ − Δ instead. The rerandomized
//! slope is the debiased slope evaluated on (γ̂_RB, σ̂²_RB) over the selected
//! set, where Δ becomes the data-dependent Δ_λ. Debiased variances come from
//! the regression-residual route; classic Egger keeps the textbook weighted
//! least-squares variance with a multiplicative overdispersion factor floored
//! at one.

use crate::error::{Error, Result};
use crate::math::KahanSum;
use crate::model::SummaryDataset;
use crate::selection::RbRecord;

use super::sums::{dataset_views, record_views, SnpView, WeightedSums};
use super::{
    pleiotropy_test, post_selection_diagnostics, strength_for_report, EstimateReport, Method,
    ReportDiagnostics,
};

/// Intermediate sums of the Egger decomposition, exposed for oracle checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EggerInternals {
    /// Σ σ_Y⁻².
    pub s0: f64,
    /// Σ σ_Y⁻² γ̂ (RB plug-in under rerandomization).
    pub sg: f64,
    pub theta1: f64,
    /// Raw weighted variance, before the Δ subtraction.
    pub theta2_hat: f64,
    /// Δ or Δ_λ.
    pub delta: f64,
    /// θ̂₂ − Δ; the debiased denominator.
    pub theta2_adj: f64,
}

impl EggerInternals {
    fn from_sums(s: &WeightedSums) -> Self {
        let theta1 = s.s0 * s.sgbg - s.sg * s.sbg;
        let theta2_hat = s.s0 * s.sgg - s.sg * s.sg;
        let delta = s.s0 * s.sxx - s.sxx4;
        EggerInternals {
            s0: s.s0,
            sg: s.sg,
            theta1,
            theta2_hat,
            delta,
            theta2_adj: theta2_hat - delta,
        }
    }
}

/// θ̂₁, θ̂₂, Δ for a raw dataset.
pub fn egger_internals(ds: &SummaryDataset) -> EggerInternals {
    EggerInternals::from_sums(&WeightedSums::accumulate(&dataset_views(ds)))
}

/// θ̂₁,λ-side internals for a selected Rao-Blackwell set (Δ becomes Δ_λ).
pub fn egger_internals_rb(records: &[RbRecord]) -> EggerInternals {
    EggerInternals::from_sums(&WeightedSums::accumulate(&record_views(records)))
}

/// Per-SNP residual terms of the estimating equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTerms {
    /// ξ̂_j = γ̂Γ̂ − β̂(γ̂²−σ_X²) − μ̂γ̂ (RB plug-ins under rerandomization).
    pub xi: Vec<f64>,
    /// ω̂_j = Γ̂ − β̂γ̂ − μ̂.
    pub omega: Vec<f64>,
}

fn residual_terms_views(views: &[SnpView], beta_hat: f64, mu_alpha_hat: f64) -> ResidualTerms {
    let mut xi = Vec::with_capacity(views.len());
    let mut omega = Vec::with_capacity(views.len());
    for v in views {
        xi.push(
            v.gamma * v.big_gamma
                - beta_hat * (v.gamma * v.gamma - v.sx2)
                - mu_alpha_hat * v.gamma,
        );
        omega.push(v.big_gamma - beta_hat * v.gamma - mu_alpha_hat);
    }
    ResidualTerms { xi, omega }
}

/// Residual terms for a raw dataset at the given estimates.
pub fn residual_terms(ds: &SummaryDataset, beta_hat: f64, mu_alpha_hat: f64) -> ResidualTerms {
    residual_terms_views(&dataset_views(ds), beta_hat, mu_alpha_hat)
}

/// Residual terms for a Rao-Blackwell record set at the given estimates.
pub fn residual_terms_rb(
    records: &[RbRecord],
    beta_hat: f64,
    mu_alpha_hat: f64,
) -> ResidualTerms {
    residual_terms_views(&record_views(records), beta_hat, mu_alpha_hat)
}

fn variance_from_views(
    views: &[SnpView],
    beta_hat: f64,
    mu_alpha_hat: f64,
    internals: &EggerInternals,
) -> Result<(f64, f64)> {
    if views.len() < 3 {
        return Err(Error::TooFewSnps {
            needed: 3,
            got: views.len(),
        });
    }
    if !(internals.theta2_adj > 0.0) {
        return Err(Error::WeakInstrumentDenominator {
            value: internals.theta2_adj,
        });
    }
    let terms = residual_terms_views(views, beta_hat, mu_alpha_hat);
    let mut v_beta = KahanSum::new();
    let mut v_mu = KahanSum::new();
    let inv_s0 = 1.0 / internals.s0;
    let slope_load = internals.sg * inv_s0;
    for ((v, xi), omega) in views.iter().zip(&terms.xi).zip(&terms.omega) {
        let u = xi * internals.s0 - omega * internals.sg;
        let wu = v.weight * u;
        v_beta.add(wu * wu);
        // first-order influence of SNP j on μ̂, accounting for β̂'s noise
        let infl = v.weight * (omega * inv_s0 - slope_load * u / internals.theta2_adj);
        v_mu.add(infl * infl);
    }
    Ok((
        v_beta.total() / (internals.theta2_adj * internals.theta2_adj),
        v_mu.total(),
    ))
}

/// Residual-based variance of the debiased slope and intercept.
///
/// Returns `(V_beta, V_mu)` evaluated at the supplied estimates.
pub fn egger_variance(
    ds: &SummaryDataset,
    beta_hat: f64,
    mu_alpha_hat: f64,
    internals: &EggerInternals,
) -> Result<(f64, f64)> {
    variance_from_views(&dataset_views(ds), beta_hat, mu_alpha_hat, internals)
}

/// [`egger_variance`] on Rao-Blackwell inputs (the REgger route).
pub fn egger_variance_rb(
    records: &[RbRecord],
    beta_hat: f64,
    mu_alpha_hat: f64,
    internals: &EggerInternals,
) -> Result<(f64, f64)> {
    variance_from_views(&record_views(records), beta_hat, mu_alpha_hat, internals)
}

fn small_sample_warnings(n: usize, ess_rb: Option<f64>) -> Vec<String> {
    let mut warnings = Vec::new();
    if n == 3 {
        warnings.push("small-sample: only 3 SNPs, variance theory is asymptotic".into());
    }
    if let Some(ess) = ess_rb {
        if ess < 20.0 {
            warnings.push(format!(
                "low RB-based effective sample size ({ess:.1} < 20); estimates may be unreliable"
            ));
        }
    }
    warnings
}

/// Classic Egger regression: weighted slope and intercept with the textbook
/// WLS variance, overdispersion floored at one.
pub fn egger(ds: &SummaryDataset) -> Result<EstimateReport> {
    let views = dataset_views(ds);
    if views.len() < 3 {
        return Err(Error::TooFewSnps {
            needed: 3,
            got: views.len(),
        });
    }
    let sums = WeightedSums::accumulate(&views);
    let internals = EggerInternals::from_sums(&sums);
    if !(internals.theta2_hat > 0.0) {
        return Err(Error::DegenerateRegressorVariance);
    }
    let beta_hat = internals.theta1 / internals.theta2_hat;
    let mu_alpha_hat = (sums.sbg - beta_hat * sums.sg) / sums.s0;

    let mut rss = KahanSum::new();
    for v in &views {
        let r = v.big_gamma - mu_alpha_hat - beta_hat * v.gamma;
        rss.add(v.weight * r * r);
    }
    let overdispersion = (rss.total() / (views.len() as f64 - 2.0)).max(1.0);
    let v_beta = overdispersion * sums.s0 / internals.theta2_hat;
    let v_mu = overdispersion * sums.sgg / internals.theta2_hat;
    let (z, p) = pleiotropy_test(mu_alpha_hat, v_mu)?;

    Ok(EstimateReport {
        method: Method::Egger,
        beta_hat,
        se_beta: v_beta.sqrt(),
        mu_alpha_hat: Some(mu_alpha_hat),
        se_mu_alpha: Some(v_mu.sqrt()),
        pleiotropy_z: Some(z),
        pleiotropy_p: Some(p),
        n_snps_used: views.len(),
        diagnostics: ReportDiagnostics {
            strength: strength_for_report(
                ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x)),
                views.len(),
            ),
            attenuation_ratio: attenuation_ratio(&internals),
            i2_gx: Some(super::diagnostics::i2_gx_from_pairs(
                ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x)),
            )),
            ess_rb: None,
        },
        warnings: small_sample_warnings(views.len(), None),
    })
}

fn attenuation_ratio(internals: &EggerInternals) -> Option<f64> {
    if internals.theta2_adj > 0.0 {
        Some(internals.theta2_adj / (internals.theta2_adj + internals.delta))
    } else {
        None
    }
}

// Shared debiased core: β̂ = θ̂₁/(θ̂₂−Δ), intercept, residual variances, test.
fn debiased_report(
    views: &[SnpView],
    internals: EggerInternals,
    method: Method,
    strength: crate::model::StrengthDiagnostics,
    i2_gx: Option<f64>,
    ess_rb: Option<f64>,
) -> Result<EstimateReport> {
    let beta_hat = internals.theta1 / internals.theta2_adj;
    let mu_alpha_hat = (views
        .iter()
        .map(|v| v.weight * v.big_gamma)
        .collect::<KahanSum>()
        .total()
        - beta_hat * internals.sg)
        / internals.s0;
    let (v_beta, v_mu) = variance_from_views(views, beta_hat, mu_alpha_hat, &internals)?;
    let (z, p) = pleiotropy_test(mu_alpha_hat, v_mu)?;
    Ok(EstimateReport {
        method,
        beta_hat,
        se_beta: v_beta.sqrt(),
        mu_alpha_hat: Some(mu_alpha_hat),
        se_mu_alpha: Some(v_mu.sqrt()),
        pleiotropy_z: Some(z),
        pleiotropy_p: Some(p),
        n_snps_used: views.len(),
        diagnostics: ReportDiagnostics {
            strength,
            attenuation_ratio: attenuation_ratio(&internals),
            i2_gx,
            ess_rb,
        },
        warnings: small_sample_warnings(views.len(), ess_rb),
    })
}

/// Debiased Egger: subtracts the measurement-error term Δ from the regression
/// denominator, restoring consistency under many weak instruments.
pub fn degger(ds: &SummaryDataset) -> Result<EstimateReport> {
    let views = dataset_views(ds);
    if views.len() < 3 {
        return Err(Error::TooFewSnps {
            needed: 3,
            got: views.len(),
        });
    }
    let internals = EggerInternals::from_sums(&WeightedSums::accumulate(&views));
    if !(internals.theta2_adj > 0.0) {
        return Err(Error::WeakInstrumentDenominator {
            value: internals.theta2_adj,
        });
    }
    debiased_report(
        &views,
        internals,
        Method::Degger,
        strength_for_report(
            ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x)),
            views.len(),
        ),
        Some(super::diagnostics::i2_gx_from_pairs(
            ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x)),
        )),
        None,
    )
}

/// Rerandomized Egger: the debiased estimator on Rao-Blackwell inputs over
/// the selected set, with Δ_λ built from the per-SNP σ̂²_RB.
///
/// `lambda` is the selection threshold the records were produced with; it
/// enters only the post-selection effective-sample-size diagnostic.
pub fn regger(records: &[RbRecord], lambda: f64) -> Result<EstimateReport> {
    if records.len() < 3 {
        return Err(Error::InsufficientSelected {
            needed: 3,
            got: records.len(),
        });
    }
    let views = record_views(records);
    let internals = EggerInternals::from_sums(&WeightedSums::accumulate(&views));
    let post = post_selection_diagnostics(records, lambda)?;
    if !(internals.theta2_adj > 0.0) {
        return Err(Error::PostSelectionCollapse {
            value: internals.theta2_adj,
            psi_lambda: post.psi_lambda,
        });
    }
    debiased_report(
        &views,
        internals,
        Method::Regger,
        strength_for_report(
            records.iter().map(|r| (r.gamma_rb, r.sigma_rb_sq.sqrt())),
            records.len(),
        ),
        Some(super::diagnostics::i2_gx_from_pairs(
            records.iter().map(|r| (r.gamma_rb, r.sigma_rb_sq.sqrt())),
        )),
        Some(post.ess_rb),
    )
}
