//! Scalar special functions: modified Bessel functions of the first kind,
//! the Bessel ratio `A_k` with its derivative and inverse, and chi-square
//! distribution functions.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
mod chisq;

pub use bessel::{
    a_inverse, a_prime, a_prime_limit_at_zero, bessel_i, bessel_i_scaled, bessel_ratio_a, j_k,
    j_k_limit_at_zero, log_bessel_i, BesselOrder,
};
pub use chisq::{chi2_cdf, chi2_quantile, chi2_sf, gamma_p, gamma_q, ChiSqSpec};

pub(crate) use bessel::check_dim;
