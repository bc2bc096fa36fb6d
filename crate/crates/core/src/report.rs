//! Serialization of estimate reports.
//!
//! Reports go out in two shapes: a line-oriented `key=value` text block for
//! terminals and logs, and JSON (via serde on [`EstimateReport`]) for
//! machines. JSON documents embed the schema version so downstream consumers
//! can pin against it.

use crate::estimators::EstimateReport;

/// Version tag carried by every JSON document this workspace emits.
pub const SCHEMA_VERSION: &str = "mr-regger/1";

/// Line-oriented `key=value` rendering with a fixed key order. Optional
/// fields that are absent are omitted rather than written empty.
pub fn to_key_value(report: &EstimateReport) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    push("method", report.method.to_string());
    push("beta_hat", report.beta_hat.to_string());
    push("se_beta", report.se_beta.to_string());
    let (lo, hi) = report.ci_95();
    push("ci95_lo", lo.to_string());
    push("ci95_hi", hi.to_string());
    if let Some(mu) = report.mu_alpha_hat {
        push("mu_alpha_hat", mu.to_string());
    }
    if let Some(se) = report.se_mu_alpha {
        push("se_mu_alpha", se.to_string());
    }
    if let Some(z) = report.pleiotropy_z {
        push("pleiotropy_z", z.to_string());
    }
    if let Some(p) = report.pleiotropy_p {
        push("pleiotropy_p", p.to_string());
    }
    push("n_snps_used", report.n_snps_used.to_string());
    push("kappa", report.diagnostics.strength.kappa.to_string());
    push("psi", report.diagnostics.strength.psi.to_string());
    if let Some(r) = report.diagnostics.attenuation_ratio {
        push("attenuation_ratio", r.to_string());
    }
    if let Some(i2) = report.diagnostics.i2_gx {
        push("i2_gx", i2.to_string());
    }
    if let Some(ess) = report.diagnostics.ess_rb {
        push("ess_rb", ess.to_string());
    }
    for w in &report.warnings {
        push("warning", w.clone());
    }
    out
}
