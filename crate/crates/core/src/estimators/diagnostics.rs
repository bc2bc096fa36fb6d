//! Diagnostics attached to estimate reports: the directional-pleiotropy test,
//! the Egger attenuation factor with I²_GX, and post-selection strength.

use crate::error::{Error, Result};
use crate::math::{norm_cdf_c, KahanSum};
use crate::model::SummaryDataset;
use crate::selection::RbRecord;

use super::egger::egger_internals;

/// Two-sided z-test of the directional-pleiotropy intercept.
///
/// Returns `(z, p)` with z = μ̂_α/√V_μ and p = 2·Φ̄(|z|).
pub fn pleiotropy_test(mu_alpha_hat: f64, v_mu: f64) -> Result<(f64, f64)> {
    if !(v_mu > 0.0) {
        return Err(Error::InvalidParam(format!(
            "pleiotropy test needs a positive intercept variance, got {v_mu}"
        )));
    }
    let z = mu_alpha_hat / v_mu.sqrt();
    Ok((z, 2.0 * norm_cdf_c(z.abs())))
}

/// Plug-in Egger attenuation factor and the I²_GX weak-instrument statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationDiagnostics {
    /// θ̂₂,dE/(θ̂₂,dE + Δ): the factor by which classic Egger shrinks the slope.
    pub ratio: f64,
    /// Measurement-error heterogeneity statistic in [0, 1]; values below 0.9
    /// flag appreciable weak-instrument attenuation.
    pub i2_gx: f64,
}

// I²_GX = max(0, (Q − (p−1))/Q) with Q the precision-weighted heterogeneity
// of the exposure associations. Any exact-zero σ_X makes Q degenerate and the
// statistic is 1 by convention (no measurement error).
pub(super) fn i2_gx_from_pairs(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let mut wsum = KahanSum::new();
    let mut wg = KahanSum::new();
    let mut n = 0usize;
    for (g, sx) in pairs.clone() {
        if sx == 0.0 {
            return 1.0;
        }
        let w = 1.0 / (sx * sx);
        wsum.add(w);
        wg.add(w * g);
        n += 1;
    }
    if n < 2 {
        return 1.0;
    }
    let mean = wg.total() / wsum.total();
    let mut q = KahanSum::new();
    for (g, sx) in pairs {
        let d = g - mean;
        q.add(d * d / (sx * sx));
    }
    let q = q.total();
    if q <= 0.0 {
        return 0.0;
    }
    ((q - (n as f64 - 1.0)) / q).max(0.0)
}

/// Attenuation factor and I²_GX for a dataset.
pub fn attenuation_diagnostics(ds: &SummaryDataset) -> Result<AttenuationDiagnostics> {
    if ds.len() < 3 {
        return Err(Error::TooFewSnps {
            needed: 3,
            got: ds.len(),
        });
    }
    let internals = egger_internals(ds);
    if !(internals.theta2_adj > 0.0) {
        return Err(Error::WeakInstrumentDenominator {
            value: internals.theta2_adj,
        });
    }
    Ok(AttenuationDiagnostics {
        ratio: internals.theta2_adj / (internals.theta2_adj + internals.delta),
        i2_gx: i2_gx_from_pairs(ds.snps().iter().map(|s| (s.gamma_hat, s.sigma_x))),
    })
}

/// Post-selection instrument strength computed from Rao-Blackwell plug-ins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelectionDiagnostics {
    /// κ̂_λ: mean of γ̂²_RB/σ̂²_RB over the selected set.
    pub kappa_lambda: f64,
    /// ψ̂_λ = κ̂_λ·√p_λ / max(1, λ).
    pub psi_lambda: f64,
    /// The ψ̂_λ plug-in reported to users; values below about 20 are flagged.
    pub ess_rb: f64,
    pub p_lambda: usize,
}

/// RB-based strength of a selected set; the true γ is unknown, so the
/// Rao-Blackwell estimates stand in for it.
pub fn post_selection_diagnostics(
    records: &[RbRecord],
    lambda: f64,
) -> Result<PostSelectionDiagnostics> {
    if records.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut acc = KahanSum::new();
    for r in records {
        acc.add(r.gamma_rb * r.gamma_rb / r.sigma_rb_sq);
    }
    let p_lambda = records.len();
    let kappa_lambda = acc.total() / p_lambda as f64;
    let psi_lambda = kappa_lambda * (p_lambda as f64).sqrt() / lambda.max(1.0);
    Ok(PostSelectionDiagnostics {
        kappa_lambda,
        psi_lambda,
        ess_rb: psi_lambda,
        p_lambda,
    })
}
