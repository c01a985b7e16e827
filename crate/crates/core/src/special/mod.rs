//! Scalar special functions and the hypoexponential CDF.

mod gamma;
mod hypoexp;

pub use gamma::{chi_cdf, chi_sf, gamma_cdf, gamma_sf, normal_cdf, normal_quantile, reg_lower_gamma, reg_upper_gamma};
pub use hypoexp::{expm, hypoexp_cdf, hypoexp_sf, BidiagonalGenerator, HypoexpSpec, Matrix};
