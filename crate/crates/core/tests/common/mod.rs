//! Shared helpers for the integration and acceptance suites: seeded random
//! datasets and exact-arithmetic reference computations.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mr_regger::{SnpSummary, SummaryDataset};

pub type Rational = Ratio<BigInt>;

pub fn rat(x: f64) -> Rational {
    Rational::from_float(x).expect("finite input")
}

/// A random dataset whose exposure spread dominates the measurement error,
/// so every estimator's denominator stays well positive.
pub fn random_dataset(seed: u64, n: usize) -> SummaryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snps = (0..n)
        .map(|i| {
            let gamma_hat = rng.gen_range(-0.5..0.5);
            SnpSummary {
                snp_id: format!("rs{i}"),
                gamma_hat,
                sigma_x: rng.gen_range(0.001..0.02),
                big_gamma_hat: 0.3 * gamma_hat + rng.gen_range(-0.05..0.05),
                sigma_y: rng.gen_range(0.005..0.05),
            }
        })
        .collect();
    SummaryDataset::new(snps, format!("random seed={seed}"))
}

/// Like [`random_dataset`] but with |γ̂/σ_X| bounded away from zero, so
/// rerandomized selection never lands in the negative-bracket zone of the
/// Rao-Blackwell variance (which the library treats as an error).
pub fn random_dataset_strong(seed: u64, n: usize) -> SummaryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let snps = (0..n)
        .map(|i| {
            let magnitude = rng.gen_range(0.05..0.5);
            let gamma_hat = if rng.gen::<bool>() { magnitude } else { -magnitude };
            SnpSummary {
                snp_id: format!("rs{i}"),
                gamma_hat,
                sigma_x: rng.gen_range(0.001..0.02),
                big_gamma_hat: 0.3 * gamma_hat + rng.gen_range(-0.05..0.05),
                sigma_y: rng.gen_range(0.005..0.05),
            }
        })
        .collect();
    SummaryDataset::new(snps, format!("random strong seed={seed}"))
}

/// Same dataset with the exposure standard errors zeroed.
pub fn zero_sigma_x(ds: &SummaryDataset) -> SummaryDataset {
    SummaryDataset::new(
        ds.snps()
            .iter()
            .map(|s| SnpSummary {
                sigma_x: 0.0,
                ..s.clone()
            })
            .collect(),
        "sigma_x zeroed",
    )
}

/// Exact weighted sums over (gamma, big_gamma, sigma_x, sigma_y) quadruples.
pub struct ExactSums {
    pub s0: Rational,
    pub sg: Rational,
    pub sbg: Rational,
    pub sgbg: Rational,
    pub sgg: Rational,
    pub sxx: Rational,
    pub sxx4: Rational,
}

/// Quads are (gamma, big_gamma, sigma_x_squared, sigma_y): the σ² enters
/// pre-squared so Rao-Blackwell variance estimates pass through exactly.
pub fn exact_sums(quads: impl Iterator<Item = (f64, f64, f64, f64)>) -> ExactSums {
    let zero = || Rational::from_integer(BigInt::from(0));
    let mut s = ExactSums {
        s0: zero(),
        sg: zero(),
        sbg: zero(),
        sgbg: zero(),
        sgg: zero(),
        sxx: zero(),
        sxx4: zero(),
    };
    for (g, bg, sx2, sy) in quads {
        let g = rat(g);
        let bg = rat(bg);
        let sx2 = rat(sx2);
        let sy = rat(sy);
        let w = Rational::from_integer(BigInt::from(1)) / (&sy * &sy);
        s.s0 += &w;
        s.sg += &w * &g;
        s.sbg += &w * &bg;
        s.sgbg += &w * &g * &bg;
        s.sgg += &w * &g * &g;
        s.sxx += &w * &sx2;
        s.sxx4 += &w * &w * &sx2;
    }
    s
}

pub fn exact_sums_dataset(ds: &SummaryDataset) -> ExactSums {
    exact_sums(ds.snps().iter().map(|s| {
        (
            s.gamma_hat,
            s.big_gamma_hat,
            s.sigma_x * s.sigma_x,
            s.sigma_y,
        )
    }))
}

pub fn exact_sums_records(records: &[mr_regger::RbRecord]) -> ExactSums {
    exact_sums(records.iter().map(|r| {
        (
            r.gamma_rb,
            r.snp.big_gamma_hat,
            r.sigma_rb_sq,
            r.snp.sigma_y,
        )
    }))
}

/// Exact θ̂₁, θ̂₂, Δ by direct summation.
pub fn exact_internals(s: &ExactSums) -> (f64, f64, f64) {
    let theta1 = &s.s0 * &s.sgbg - &s.sg * &s.sbg;
    let theta2 = &s.s0 * &s.sgg - &s.sg * &s.sg;
    let delta = &s.s0 * &s.sxx - &s.sxx4;
    (
        theta1.to_f64().unwrap(),
        theta2.to_f64().unwrap(),
        delta.to_f64().unwrap(),
    )
}

/// Exact weighted-least-squares solution of the 2×2 normal equations for
/// the regression of Γ̂ on γ̂ with weights σ_Y⁻²: returns (slope, intercept).
pub fn exact_wls(s: &ExactSums) -> (f64, f64) {
    let det = &s.s0 * &s.sgg - &s.sg * &s.sg;
    let slope = (&s.s0 * &s.sgbg - &s.sg * &s.sbg) / &det;
    let intercept = (&s.sgg * &s.sbg - &s.sg * &s.sgbg) / &det;
    (slope.to_f64().unwrap(), intercept.to_f64().unwrap())
}

/// Relative difference with an absolute floor.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-30)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (ddof = 1).
pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}
