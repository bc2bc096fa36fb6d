//! Weighted accumulations shared by the IVW and Egger families.

use crate::math::KahanSum;
use crate::model::SummaryDataset;
use crate::selection::RbRecord;

/// Per-SNP quantities as the estimators see them: either the raw summary
/// statistics or their Rao-Blackwell replacements.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SnpView {
    /// γ̂ or γ̂_RB.
    pub gamma: f64,
    /// Γ̂.
    pub big_gamma: f64,
    /// σ_Y⁻².
    pub weight: f64,
    /// σ_X² or σ̂²_RB.
    pub sx2: f64,
}

pub(crate) fn dataset_views(ds: &SummaryDataset) -> Vec<SnpView> {
    ds.snps()
        .iter()
        .map(|s| SnpView {
            gamma: s.gamma_hat,
            big_gamma: s.big_gamma_hat,
            weight: 1.0 / (s.sigma_y * s.sigma_y),
            sx2: s.sigma_x * s.sigma_x,
        })
        .collect()
}

pub(crate) fn record_views(records: &[RbRecord]) -> Vec<SnpView> {
    records
        .iter()
        .map(|r| SnpView {
            gamma: r.gamma_rb,
            big_gamma: r.snp.big_gamma_hat,
            weight: 1.0 / (r.snp.sigma_y * r.snp.sigma_y),
            sx2: r.sigma_rb_sq,
        })
        .collect()
}

/// The seven weighted sums every estimator is assembled from, accumulated
/// with compensated summation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WeightedSums {
    /// Σ w
    pub s0: f64,
    /// Σ w·γ
    pub sg: f64,
    /// Σ w·Γ
    pub sbg: f64,
    /// Σ w·γ·Γ
    pub sgbg: f64,
    /// Σ w·γ²
    pub sgg: f64,
    /// Σ w·σ_X²
    pub sxx: f64,
    /// Σ w²·σ_X²
    pub sxx4: f64,
}

impl WeightedSums {
    pub fn accumulate(views: &[SnpView]) -> Self {
        let mut s0 = KahanSum::new();
        let mut sg = KahanSum::new();
        let mut sbg = KahanSum::new();
        let mut sgbg = KahanSum::new();
        let mut sgg = KahanSum::new();
        let mut sxx = KahanSum::new();
        let mut sxx4 = KahanSum::new();
        for v in views {
            s0.add(v.weight);
            sg.add(v.weight * v.gamma);
            sbg.add(v.weight * v.big_gamma);
            sgbg.add(v.weight * v.gamma * v.big_gamma);
            sgg.add(v.weight * (v.gamma * v.gamma));
            sxx.add(v.weight * v.sx2);
            sxx4.add(v.weight * v.weight * v.sx2);
        }
        WeightedSums {
            s0: s0.total(),
            sg: sg.total(),
            sbg: sbg.total(),
            sgbg: sgbg.total(),
            sgg: sgg.total(),
            sxx: sxx.total(),
            sxx4: sxx4.total(),
        }
    }
}
