//! Two-sample summary-data Mendelian randomization with many weak
//! instruments.
//!
//! The crate provides the IVW family (IVW, dIVW, RIVW) and the Egger family
//! (Egger, dEgger, REgger) of causal-effect estimators, rerandomized
//! instrument selection with Rao-Blackwell winner's-curse correction, a
//! directional-pleiotropy test, a GWAS summary-statistics harmonization
//! pipeline, and a seeded Monte Carlo engine for method evaluation.
//!
//! # Modules
//!
//! - [`model`] — per-SNP summary data, datasets, strength diagnostics
//! - [`selection`] — rerandomized selection and Rao-Blackwell debiasing
//! - [`estimators`] — the six estimators with variance and test machinery
//! - [`simulation`] — mixture-model generator and Monte Carlo studies
//! - [`ingest`] — GWAS file parsing, QC, and allele harmonization
//! - [`report`] — serialization of estimate reports
//! - [`math`] — normal distribution kernels and compensated summation

pub mod error;
pub mod estimators;
pub mod ingest;
pub mod math;
pub mod model;
pub mod report;
pub mod selection;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, Method};
pub use model::{SnpSummary, StrengthDiagnostics, SummaryDataset};
pub use selection::{RbRecord, SelectionConfig};
