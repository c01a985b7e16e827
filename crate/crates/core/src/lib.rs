//! Estimators for the left tail of the CDF of a partial sum of order statistics,
//!
//! ```text
//! l = P(X(1) + ... + X(L) <= gamma_th),   X(1) >= X(2) >= ... >= X(N),
//! ```
//!
//! which is the outage probability of a generalized selection combining
//! receiver that keeps the `L` strongest of `N` i.i.d. branches.
//!
//! Small values of `l` make naive Monte Carlo useless. This crate provides
//! two families of variance-reduced estimators:
//!
//! * truncation-set importance sampling ([`estimators::universal_is`],
//!   [`estimators::pareto_is`], [`estimators::weibull_is`]), which samples the
//!   branches conditioned on an enclosing set `S1` whose probability is known
//!   in closed form;
//! * conditional Monte Carlo ([`estimators::cmc_gg`],
//!   [`estimators::cmc_lognormal`]), which integrates out a radial variable
//!   analytically and leaves a smooth integrand;
//!
//! plus a randomized quasi-Monte Carlo driver ([`rqmc`]) for the smooth
//! Weibull conditional estimator and a naive baseline.

// NaN-rejecting argument checks are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod rqmc;
pub mod samplers;
pub mod special;

pub use distributions::{Branches, DistributionSpec, OrderStatSumProblem};
pub use error::{Error, Result};
pub use estimators::{EstimationResult, IsWeights};
pub use samplers::RngStream;
