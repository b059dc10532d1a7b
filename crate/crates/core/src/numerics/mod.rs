//! Numerical kernels shared by the analysis modules.

pub mod quad;
pub mod rng;
pub mod special;
pub mod srange;

pub use rng::{multinomial_sample, subsample_without_replacement, SeedSpec};
pub use special::{chi2_quantile, chi2_sf, f_sf, normal_cdf, regularized_lower_gamma, t_two_sided_sf};
pub use srange::{studentized_range_cdf, studentized_range_sf};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
}
