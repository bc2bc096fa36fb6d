//! Numeric kernels shared across the crate.

mod ksum;
mod normal;

pub use ksum::{kahan_sum, KahanSum};
pub use normal::{erf, erfc, norm_cdf, norm_cdf_c, norm_pdf, norm_quantile, norm_upper_quantile};
