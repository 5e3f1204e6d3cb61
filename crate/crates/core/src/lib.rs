//! Tests on the concentration of Fisher-von Mises-Langevin (FvML) data on
//! the unit hypersphere `S^{k-1}`.
//!
//! * [`inference`]: the one-sample score test for `kappa = kappa_0`, the
//!   Rayleigh test of uniformity and the multi-sample test of homogeneity of
//!   concentrations, plus the central sequence and Fisher information of the
//!   concentration-location model.
//! * [`power`]: asymptotic powers of the three tests against local
//!   alternatives.
//! * [`montecarlo`]: reproducible simulation of empirical sizes and power
//!   curves. Replications run on rayon when the `parallel` feature is on
//!   (the default) and sequentially otherwise; results are identical.
//! * [`specfun`], [`sphere`], [`fvml`]: the numerical and geometric pieces
//!   underneath.

pub mod error;
pub mod fvml;
pub mod inference;
pub mod montecarlo;
pub mod power;
pub mod specfun;
pub mod sphere;

pub use error::{Error, Result};
