//! Point estimators, variance estimators, and attached diagnostics for the
//! IVW and Egger families.

mod diagnostics;
mod egger;
mod ivw;
mod sums;

use serde::{Deserialize, Serialize};

use crate::model::StrengthDiagnostics;

pub use diagnostics::{
    attenuation_diagnostics, pleiotropy_test, post_selection_diagnostics, AttenuationDiagnostics,
    PostSelectionDiagnostics,
};
pub use egger::{
    degger, egger, egger_internals, egger_internals_rb, egger_variance, egger_variance_rb,
    regger, residual_terms, residual_terms_rb, EggerInternals, ResidualTerms,
};
pub use ivw::{divw, ivw, rivw};

/// The six estimators this crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ivw,
    Divw,
    Rivw,
    Egger,
    Degger,
    Regger,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ivw,
        Method::Divw,
        Method::Rivw,
        Method::Egger,
        Method::Degger,
        Method::Regger,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ivw => "ivw",
            Method::Divw => "divw",
            Method::Rivw => "rivw",
            Method::Egger => "egger",
            Method::Degger => "degger",
            Method::Regger => "regger",
        }
    }

    /// Whether the method consumes Rao-Blackwell records from rerandomized
    /// selection rather than a raw dataset.
    pub fn uses_rerandomized_selection(&self) -> bool {
        matches!(self, Method::Rivw | Method::Regger)
    }

    /// Whether the method fits a directional-pleiotropy intercept.
    pub fn has_intercept(&self) -> bool {
        matches!(self, Method::Egger | Method::Degger | Method::Regger)
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ivw" => Ok(Method::Ivw),
            "divw" => Ok(Method::Divw),
            "rivw" => Ok(Method::Rivw),
            "egger" => Ok(Method::Egger),
            "degger" => Ok(Method::Degger),
            "regger" => Ok(Method::Regger),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strength and weak-instrument diagnostics attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiagnostics {
    pub strength: StrengthDiagnostics,
    /// Plug-in estimate of the Egger attenuation factor (Egger family only).
    pub attenuation_ratio: Option<f64>,
    pub i2_gx: Option<f64>,
    /// Post-selection effective sample size (rerandomized methods only).
    pub ess_rb: Option<f64>,
}

/// One method's estimate with its uncertainty, test results, and diagnostics.
///
/// The 95% confidence interval is `beta_hat ± 1.96·se_beta` and is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub beta_hat: f64,
    pub se_beta: f64,
    pub mu_alpha_hat: Option<f64>,
    pub se_mu_alpha: Option<f64>,
    pub pleiotropy_z: Option<f64>,
    pub pleiotropy_p: Option<f64>,
    pub n_snps_used: usize,
    pub diagnostics: ReportDiagnostics,
    pub warnings: Vec<String>,
}

impl EstimateReport {
    /// 95% confidence interval reconstructed from the stored fields.
    pub fn ci_95(&self) -> (f64, f64) {
        (
            self.beta_hat - 1.96 * self.se_beta,
            self.beta_hat + 1.96 * self.se_beta,
        )
    }
}

// Strength diagnostics for report assembly. Exact-zero σ_X means infinitely
// strong instruments; the strict public operation rejects that input, the
// report convention is ∞.
pub(crate) fn strength_for_report(
    pairs: impl Iterator<Item = (f64, f64)>,
    p: usize,
) -> StrengthDiagnostics {
    let mut acc = crate::math::KahanSum::new();
    let mut infinite = false;
    for (g, sx) in pairs {
        if sx == 0.0 {
            if g != 0.0 {
                infinite = true;
            }
            continue;
        }
        let t = g / sx;
        acc.add(t * t);
    }
    let kappa = if infinite {
        f64::INFINITY
    } else {
        acc.total() / p as f64
    };
    StrengthDiagnostics {
        kappa,
        psi: kappa * (p as f64).sqrt(),
        p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SnpSummary, SummaryDataset};
    use crate::selection::{select_random, RbRecord, SelectionConfig};

    fn snp(id: &str, gamma_hat: f64, sigma_x: f64, big_gamma_hat: f64, sigma_y: f64) -> SnpSummary {
        SnpSummary {
            snp_id: id.into(),
            gamma_hat,
            sigma_x,
            big_gamma_hat,
            sigma_y,
        }
    }

    #[test]
    fn ivw_single_snp_is_the_ratio() {
        let ds = SummaryDataset::new(vec![snp("a", 0.1, 0.01, 0.02, 0.03)], "t");
        let r = ivw(&ds).unwrap();
        assert!((r.beta_hat - 0.2).abs() < 1e-15);
        assert!(r.se_beta > 0.0);
    }

    #[test]
    fn ivw_exact_proportionality() {
        let snps = vec![
            snp("a", 0.1, 0.0, 0.03, 0.01),
            snp("b", 0.2, 0.0, 0.06, 0.02),
            snp("c", -0.4, 0.0, -0.12, 0.015),
        ];
        let r = ivw(&SummaryDataset::new(snps, "t")).unwrap();
        assert!((r.beta_hat - 0.3).abs() < 1e-14);
    }

    #[test]
    fn ivw_three_snp_exact_oracle() {
        // frozen from exact rational arithmetic: beta = 38/145
        let snps = vec![
            snp("a", 0.1, 0.0, 0.03, 0.01),
            snp("b", 0.2, 0.0, 0.05, 0.01),
            snp("c", 0.3, 0.0, 0.08, 0.02),
        ];
        let r = ivw(&SummaryDataset::new(snps, "t")).unwrap();
        assert!((r.beta_hat - 38.0 / 145.0).abs() < 1e-12);
    }

    #[test]
    fn ivw_zero_signal_errors() {
        let ds = SummaryDataset::new(vec![snp("a", 0.0, 0.01, 0.02, 0.03)], "t");
        assert!(matches!(
            ivw(&ds),
            Err(crate::error::Error::NoInstrumentSignal)
        ));
    }

    #[test]
    fn divw_single_snp_arithmetic() {
        // 0.02·0.1/(0.01 − 0.0025) = 0.26667
        let ds = SummaryDataset::new(vec![snp("a", 0.1, 0.05, 0.02, 0.03)], "t");
        let r = divw(&ds).unwrap();
        assert!((r.beta_hat - 0.02 * 0.1 / 0.0075).abs() < 1e-14);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn divw_equals_ivw_without_measurement_error() {
        let snps = vec![
            snp("a", 0.12, 0.0, 0.05, 0.01),
            snp("b", -0.2, 0.0, -0.02, 0.02),
            snp("c", 0.31, 0.0, 0.09, 0.015),
            snp("d", 0.05, 0.0, 0.01, 0.01),
        ];
        let ds = SummaryDataset::new(snps, "t");
        let a = divw(&ds).unwrap();
        let b = ivw(&ds).unwrap();
        assert_eq!(a.beta_hat.to_bits(), b.beta_hat.to_bits());
    }

    #[test]
    fn divw_denominator_collapse() {
        // sigma_x dwarfs gamma_hat, adjusted denominator goes negative
        let ds = SummaryDataset::new(vec![snp("a", 0.001, 0.1, 0.02, 0.03)], "t");
        assert!(matches!(
            divw(&ds),
            Err(crate::error::Error::WeakInstrumentDenominator { .. })
        ));
    }

    #[test]
    fn egger_exact_line() {
        // equal weights, no measurement error: slope 2, intercept −1
        let snps = vec![
            snp("a", 1.0, 0.0, 1.0, 1.0),
            snp("b", 2.0, 0.0, 3.0, 1.0),
            snp("c", 3.0, 0.0, 5.0, 1.0),
        ];
        let r = egger(&SummaryDataset::new(snps, "t")).unwrap();
        assert!((r.beta_hat - 2.0).abs() < 1e-12);
        assert!((r.mu_alpha_hat.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn egger_needs_three_snps_and_spread() {
        let two = SummaryDataset::new(
            vec![snp("a", 1.0, 0.0, 1.0, 1.0), snp("b", 2.0, 0.0, 3.0, 1.0)],
            "t",
        );
        assert!(matches!(
            egger(&two),
            Err(crate::error::Error::TooFewSnps { needed: 3, got: 2 })
        ));
        let collinear = SummaryDataset::new(
            vec![
                snp("a", 1.0, 0.0, 1.0, 1.0),
                snp("b", 1.0, 0.0, 3.0, 1.0),
                snp("c", 1.0, 0.0, 5.0, 1.0),
            ],
            "t",
        );
        assert!(matches!(
            egger(&collinear),
            Err(crate::error::Error::DegenerateRegressorVariance)
        ));
    }

    fn five_snp_fixture() -> SummaryDataset {
        SummaryDataset::new(
            vec![
                snp("a", 0.025, 0.010, 0.012, 0.015),
                snp("b", -0.040, 0.012, -0.015, 0.010),
                snp("c", 0.060, 0.008, 0.030, 0.020),
                snp("d", 0.015, 0.015, 0.002, 0.012),
                snp("e", -0.055, 0.009, -0.028, 0.018),
            ],
            "fixture",
        )
    }

    #[test]
    fn degger_matches_exact_arithmetic_oracle() {
        // frozen from exact rational arithmetic on the fixture
        let ds = five_snp_fixture();
        let internals = egger_internals(&ds);
        assert!((internals.theta1 - 433_782.578_875_171_5).abs() < 1e-6 * internals.theta1.abs());
        assert!(
            (internals.theta2_hat - 1_001_505.701_303_155).abs()
                < 1e-12 * internals.theta2_hat
        );
        assert!((internals.delta - 75_644.658_779_149_53).abs() < 1e-12 * internals.delta);
        let r = degger(&ds).unwrap();
        assert!((r.beta_hat - 0.468_518_016_151_354).abs() < 1e-12);
        assert!((r.mu_alpha_hat.unwrap() - 5.941_860_068_961_137e-5).abs() < 1e-15);
        let e = egger(&ds).unwrap();
        assert!((e.beta_hat - 0.433_130_413_846_606_55).abs() < 1e-12);
        assert!((e.mu_alpha_hat.unwrap() + 2.088_226_639_201_733_4e-4).abs() < 1e-15);
        // classic Egger SE from the floored-overdispersion WLS form
        assert!((e.se_beta - 0.164_118_106_707_819_7).abs() < 1e-12);
        assert!((e.se_mu_alpha.unwrap() - 6.214_382_473_786_929e-3).abs() < 1e-15);
    }

    #[test]
    fn degger_equals_egger_without_measurement_error() {
        let snps = vec![
            snp("a", 0.8, 0.0, 1.1, 0.9),
            snp("b", 2.1, 0.0, 3.0, 1.1),
            snp("c", 3.2, 0.0, 5.2, 1.0),
            snp("d", -1.0, 0.0, -2.1, 1.3),
        ];
        let ds = SummaryDataset::new(snps, "t");
        let d = degger(&ds).unwrap();
        let e = egger(&ds).unwrap();
        assert_eq!(d.beta_hat.to_bits(), e.beta_hat.to_bits());
        assert_eq!(
            d.mu_alpha_hat.unwrap().to_bits(),
            e.mu_alpha_hat.unwrap().to_bits()
        );
    }

    #[test]
    fn estimating_equation_residuals_vanish() {
        // Σwω̂ = 0 and Σw[ξ̂S0 − ω̂Sg] = β̂·Σw²σ_X², both exact identities
        let ds = five_snp_fixture();
        let r = degger(&ds).unwrap();
        let internals = egger_internals(&ds);
        let terms = residual_terms(&ds, r.beta_hat, r.mu_alpha_hat.unwrap());
        let mut womega = 0.0;
        let mut wu = 0.0;
        let mut sxx4 = 0.0;
        for (snp, (xi, om)) in ds
            .snps()
            .iter()
            .zip(terms.xi.iter().zip(terms.omega.iter()))
        {
            let w = 1.0 / (snp.sigma_y * snp.sigma_y);
            womega += w * om;
            wu += w * (xi * internals.s0 - om * internals.sg);
            sxx4 += w * w * snp.sigma_x * snp.sigma_x;
        }
        let scale = internals.theta1.abs().max(1.0);
        assert!(womega.abs() < 1e-10 * internals.s0, "Σwω̂ = {womega}");
        assert!(
            (wu - r.beta_hat * sxx4).abs() < 1e-10 * scale,
            "slope equation residual: {} vs {}",
            wu,
            r.beta_hat * sxx4
        );
    }

    #[test]
    fn regger_at_lambda_zero_equals_degger() {
        let ds = five_snp_fixture();
        let cfg = SelectionConfig::new(0.0, 0.5, 11).unwrap();
        let recs = select_random(&ds, &cfg).unwrap();
        let re = regger(&recs, 0.0).unwrap();
        let de = degger(&ds).unwrap();
        assert_eq!(re.beta_hat.to_bits(), de.beta_hat.to_bits());
        assert_eq!(re.se_beta.to_bits(), de.se_beta.to_bits());
        assert_eq!(
            re.mu_alpha_hat.unwrap().to_bits(),
            de.mu_alpha_hat.unwrap().to_bits()
        );
        let ri = rivw(&recs, 0.0).unwrap();
        let di = divw(&ds).unwrap();
        assert_eq!(ri.beta_hat.to_bits(), di.beta_hat.to_bits());
        assert_eq!(ri.se_beta.to_bits(), di.se_beta.to_bits());
    }

    #[test]
    fn rivw_single_record_arithmetic() {
        let rec = RbRecord {
            snp: snp("a", 0.11, 0.05, 0.02, 0.03),
            z_noise: 0.0,
            gamma_rb: 0.1,
            sigma_rb_sq: 0.0025,
            a_plus: 0.0,
            a_minus: 0.0,
        };
        let r = rivw(&[rec], 1.0).unwrap();
        assert!((r.beta_hat - 0.02 * 0.1 / 0.0075).abs() < 1e-14);
    }

    #[test]
    fn regger_errors() {
        assert!(matches!(
            regger(&[], 1.0),
            Err(crate::error::Error::InsufficientSelected { .. })
        ));
        assert!(matches!(
            rivw(&[], 1.0),
            Err(crate::error::Error::EmptySelection)
        ));
    }

    #[test]
    fn affine_shift_moves_intercept_only() {
        let ds = five_snp_fixture();
        let c = 0.037;
        let shifted = SummaryDataset::new(
            ds.snps()
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.big_gamma_hat += c;
                    s
                })
                .collect(),
            "t",
        );
        for f in [egger, degger] {
            let base = f(&ds).unwrap();
            let moved = f(&shifted).unwrap();
            assert!((moved.beta_hat - base.beta_hat).abs() < 1e-12 * base.beta_hat.abs());
            assert!(
                (moved.mu_alpha_hat.unwrap() - base.mu_alpha_hat.unwrap() - c).abs() < 1e-12
            );
        }
    }

    #[test]
    fn gamma_multiple_shifts_slope() {
        let ds = five_snp_fixture();
        let c = 0.6;
        let tilted = SummaryDataset::new(
            ds.snps()
                .iter()
                .map(|s| {
                    let mut s2 = s.clone();
                    s2.big_gamma_hat += c * s.gamma_hat;
                    s2
                })
                .collect(),
            "t",
        );
        // classic Egger: slope moves by exactly c, intercept fixed
        let base = egger(&ds).unwrap();
        let moved = egger(&tilted).unwrap();
        assert!((moved.beta_hat - base.beta_hat - c).abs() < 1e-12);
        assert!((moved.mu_alpha_hat.unwrap() - base.mu_alpha_hat.unwrap()).abs() < 1e-12);
        // debiased Egger: θ̂₁ moves by c·θ̂₂, so the slope moves by c·θ̂₂/θ̂₂,dE
        let internals = egger_internals(&ds);
        let predicted = c * internals.theta2_hat / internals.theta2_adj;
        let base_d = degger(&ds).unwrap();
        let moved_d = degger(&tilted).unwrap();
        assert!((moved_d.beta_hat - base_d.beta_hat - predicted).abs() < 1e-12);
        // and the intercept moves by −c·(Sg/S0)·Δ/θ̂₂,dE to compensate
        let mu_shift = -c * (internals.sg / internals.s0) * internals.delta / internals.theta2_adj;
        assert!(
            (moved_d.mu_alpha_hat.unwrap() - base_d.mu_alpha_hat.unwrap() - mu_shift).abs()
                < 1e-14
        );
    }

    #[test]
    fn sign_flip_of_one_snp() {
        let ds = five_snp_fixture();
        let flipped = SummaryDataset::new(
            ds.snps()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut s = s.clone();
                    if i == 2 {
                        s.gamma_hat = -s.gamma_hat;
                        s.big_gamma_hat = -s.big_gamma_hat;
                    }
                    s
                })
                .collect(),
            "t",
        );
        // IVW family is exactly invariant per SNP sign
        assert_eq!(
            ivw(&ds).unwrap().beta_hat.to_bits(),
            ivw(&flipped).unwrap().beta_hat.to_bits()
        );
        assert_eq!(
            divw(&ds).unwrap().beta_hat.to_bits(),
            divw(&flipped).unwrap().beta_hat.to_bits()
        );
        // Egger-family θ̂₂ changes exactly through the Sg term
        let a = egger_internals(&ds);
        let b = egger_internals(&flipped);
        let predicted = a.sg * a.sg - b.sg * b.sg;
        assert!(
            ((b.theta2_hat - a.theta2_hat) - predicted).abs()
                < 1e-9 * a.theta2_hat.abs().max(1.0)
        );
    }

    #[test]
    fn report_invariants() {
        let ds = five_snp_fixture();
        for r in [
            ivw(&ds).unwrap(),
            divw(&ds).unwrap(),
            egger(&ds).unwrap(),
            degger(&ds).unwrap(),
        ] {
            assert!(r.se_beta > 0.0, "{}: se must be positive", r.method);
            assert_eq!(r.mu_alpha_hat.is_some(), r.pleiotropy_p.is_some());
            assert_eq!(r.n_snps_used, 5);
            let (lo, hi) = r.ci_95();
            assert!(lo < r.beta_hat && r.beta_hat < hi);
        }
    }
}
