//! Inverse-variance weighted family: IVW, the measurement-error debiased
//! dIVW, and the rerandomized RIVW on Rao-Blackwell inputs.

use crate::error::{Error, Result};
use crate::math::KahanSum;
use crate::model::SummaryDataset;
use crate::selection::RbRecord;

use super::sums::{dataset_views, record_views, SnpView, WeightedSums};
use super::{post_selection_diagnostics, strength_for_report, EstimateReport, Method, ReportDiagnostics};

/// Classic IVW: β̂ = Σwγ̂Γ̂ / Σwγ̂², fixed-effect variance scaled by the
/// estimated overdispersion floored at one.
pub fn ivw(ds: &SummaryDataset) -> Result<EstimateReport> {
    let views = dataset_views(ds);
    if views.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sums = WeightedSums::accumulate(&views);
    if !(sums.sgg > 0.0) {
        return Err(Error::NoInstrumentSignal);
    }
    let beta_hat = sums.sgbg / sums.sgg;

    let overdispersion = if views.len() >= 2 {
        let mut rss = KahanSum::new();
        for v in &views {
            let r = v.big_gamma - beta_hat * v.gamma;
            rss.add(v.weight * r * r);
        }
        (rss.total() / (views.len() as f64 - 1.0)).max(1.0)
    } else {
        1.0
    };
    let v_beta = overdispersion / sums.sgg;

    Ok(EstimateReport {
        method: Method::Ivw,
        beta_hat,
        se_beta: v_beta.sqrt(),
        mu_alpha_hat: None,
        se_mu_alpha: None,
        pleiotropy_z: None,
        pleiotropy_p: None,
        n_snps_used: views.len(),
        diagnostics: ReportDiagnostics {
            strength: strength_for_report(
                ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x)),
                views.len(),
            ),
            attenuation_ratio: None,
            i2_gx: None,
            ess_rb: None,
        },
        warnings: Vec::new(),
    })
}

// Debiased core shared by dIVW and RIVW: β̂ = Σwγ Γ / Σw(γ²−σ_X²) with the
// no-intercept residual variance Σw²[γΓ − β̂(γ²−σ_X²)]² / denominator².
fn debiased_ivw(views: &[SnpView]) -> Result<(f64, f64, Vec<String>)> {
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for v in views {
        num.add(v.weight * v.gamma * v.big_gamma);
        den.add(v.weight * (v.gamma * v.gamma - v.sx2));
    }
    let den = den.total();
    if !(den > 0.0) {
        return Err(Error::WeakInstrumentDenominator { value: den });
    }
    let beta_hat = num.total() / den;

    let mut warnings = Vec::new();
    let v_beta = if views.len() >= 2 {
        let mut acc = KahanSum::new();
        for v in views {
            let r = v.gamma * v.big_gamma - beta_hat * (v.gamma * v.gamma - v.sx2);
            let wr = v.weight * r;
            acc.add(wr * wr);
        }
        acc.total() / (den * den)
    } else {
        // one estimating equation, one unknown: the residual is identically
        // zero, so fall back to the leading-order term Σw²γ²σ_Y² = Σwγ²
        warnings.push("single instrument: leading-order variance approximation".into());
        let v = &views[0];
        v.weight * v.gamma * v.gamma / (den * den)
    };
    Ok((beta_hat, v_beta, warnings))
}

/// Debiased IVW: subtracts σ_X² from γ̂² in the denominator, removing the
/// weak-instrument attenuation of classic IVW.
pub fn divw(ds: &SummaryDataset) -> Result<EstimateReport> {
    let views = dataset_views(ds);
    if views.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (beta_hat, v_beta, warnings) = debiased_ivw(&views)?;
    Ok(EstimateReport {
        method: Method::Divw,
        beta_hat,
        se_beta: v_beta.sqrt(),
        mu_alpha_hat: None,
        se_mu_alpha: None,
        pleiotropy_z: None,
        pleiotropy_p: None,
        n_snps_used: views.len(),
        diagnostics: ReportDiagnostics {
            strength: strength_for_report(
                ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x)),
                views.len(),
            ),
            attenuation_ratio: None,
            i2_gx: None,
            ess_rb: None,
        },
        warnings,
    })
}

/// Rerandomized IVW: the dIVW formula with (γ̂_RB, σ̂²_RB) substituted over the
/// selected set.
///
/// `lambda` is the selection threshold the records were produced with; it
/// enters only the post-selection effective-sample-size diagnostic.
pub fn rivw(records: &[RbRecord], lambda: f64) -> Result<EstimateReport> {
    if records.is_empty() {
        return Err(Error::EmptySelection);
    }
    let views = record_views(records);
    let (beta_hat, v_beta, mut warnings) = debiased_ivw(&views)?;
    let post = post_selection_diagnostics(records, lambda)?;
    if post.ess_rb < 20.0 {
        warnings.push(format!(
            "low RB-based effective sample size ({:.1} < 20); estimates may be unreliable",
            post.ess_rb
        ));
    }
    Ok(EstimateReport {
        method: Method::Rivw,
        beta_hat,
        se_beta: v_beta.sqrt(),
        mu_alpha_hat: None,
        se_mu_alpha: None,
        pleiotropy_z: None,
        pleiotropy_p: None,
        n_snps_used: views.len(),
        diagnostics: ReportDiagnostics {
            strength: strength_for_report(
                records.iter().map(|r| (r.gamma_rb, r.sigma_rb_sq.sqrt())),
                records.len(),
            ),
            attenuation_ratio: None,
            i2_gx: None,
            ess_rb: Some(post.ess_rb),
        },
        warnings,
    })
}
