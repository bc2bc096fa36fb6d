//! Shared data model: per-SNP summary associations, datasets, simulation
//! ground truth, and instrument-strength diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::KahanSum;

/// One SNP's exposure and outcome association estimates with their standard
/// errors. The atom every estimator works on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnpSummary {
    pub snp_id: String,
    /// Per-allele SNP–exposure association, standardized-trait units.
    pub gamma_hat: f64,
    /// Standard error of `gamma_hat`; must be positive.
    pub sigma_x: f64,
    /// SNP–outcome association.
    pub big_gamma_hat: f64,
    /// Standard error of `big_gamma_hat`; must be positive.
    pub sigma_y: f64,
}

/// Ordered, immutable collection of independent SNP summaries.
///
/// Estimators never mutate a dataset; transformations produce new values, so
/// datasets can be shared freely across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDataset {
    snps: Vec<SnpSummary>,
    provenance: String,
}

impl SummaryDataset {
    pub fn new(snps: Vec<SnpSummary>, provenance: impl Into<String>) -> Self {
        Self {
            snps,
            provenance: provenance.into(),
        }
    }

    pub fn snps(&self) -> &[SnpSummary] {
        &self.snps
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.snps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snps.is_empty()
    }

    /// New dataset keeping only SNPs for which `keep` returns true.
    pub fn filtered(&self, mut keep: impl FnMut(&SnpSummary) -> bool) -> SummaryDataset {
        SummaryDataset {
            snps: self.snps.iter().filter(|s| keep(s)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Simulation-only ground truth backing a generated [`SummaryDataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrueEffects {
    /// True SNP–exposure effects, one per SNP.
    pub gamma: Vec<f64>,
    /// True direct (pleiotropic) effects on the outcome, one per SNP.
    pub alpha: Vec<f64>,
    /// True causal effect.
    pub beta: f64,
    /// Mean pleiotropic effect.
    pub mu_alpha: f64,
}

/// Average instrument strength and the effective sample size derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthDiagnostics {
    /// Average IV strength: mean of γ²/σ_X² over SNPs.
    pub kappa: f64,
    /// Effective sample size κ·√p.
    pub psi: f64,
    /// Number of SNPs.
    pub p: usize,
}

/// One invariant violation detected by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationFinding {
    pub snp_id: String,
    pub reason: String,
}

/// Checks every per-SNP invariant plus id uniqueness; returns one finding per
/// violation. An empty list means the dataset is valid.
pub fn validate_dataset(ds: &SummaryDataset) -> Vec<ValidationFinding> {
    let mut findings = Vec::new();
    let mut seen = std::collections::HashSet::with_capacity(ds.len());
    for snp in ds.snps() {
        if !(snp.sigma_x > 0.0) {
            findings.push(ValidationFinding {
                snp_id: snp.snp_id.clone(),
                reason: "nonpositive sigma_x".into(),
            });
        }
        if !(snp.sigma_y > 0.0) {
            findings.push(ValidationFinding {
                snp_id: snp.snp_id.clone(),
                reason: "nonpositive sigma_y".into(),
            });
        }
        let finite = snp.gamma_hat.is_finite()
            && snp.sigma_x.is_finite()
            && snp.big_gamma_hat.is_finite()
            && snp.sigma_y.is_finite();
        if !finite {
            findings.push(ValidationFinding {
                snp_id: snp.snp_id.clone(),
                reason: "nonfinite field".into(),
            });
        }
        if !seen.insert(snp.snp_id.as_str()) {
            findings.push(ValidationFinding {
                snp_id: snp.snp_id.clone(),
                reason: format!("duplicate id {}", snp.snp_id),
            });
        }
    }
    findings
}

/// Average IV strength κ = mean(γ²/σ_X²) and effective sample size ψ = κ√p.
///
/// Called on estimated quantities (Rao-Blackwell values), the result is the
/// RB-based effective-sample-size proxy reported to users.
pub fn strength_diagnostics(gamma: &[f64], sigma_x: &[f64]) -> Result<StrengthDiagnostics> {
    if gamma.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if gamma.len() != sigma_x.len() {
        return Err(Error::LengthMismatch {
            left: gamma.len(),
            right: sigma_x.len(),
        });
    }
    if let Some(bad) = sigma_x.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParam(format!(
            "nonpositive sigma_x at index {bad}"
        )));
    }
    let p = gamma.len();
    let mut acc = KahanSum::new();
    for (g, s) in gamma.iter().zip(sigma_x) {
        let t = g / s;
        acc.add(t * t);
    }
    let kappa = acc.total() / p as f64;
    Ok(StrengthDiagnostics {
        kappa,
        psi: kappa * (p as f64).sqrt(),
        p,
    })
}
