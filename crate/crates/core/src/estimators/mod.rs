//! Estimators of `l = P(X(1) + ... + X(L) <= gamma_th)`.
//!
//! Every estimator averages a single-draw estimator over `samples` i.i.d.
//! replicates and reports its sample variance. Work is split into fixed-size
//! chunks; chunk `c` draws from `rng.substream(c)` and chunk moments are merged
//! in chunk order, so results depend on `(seed, stream_id)` but not on the
//! number of worker threads.

pub(crate) mod cmc;
mod naive;
mod truncation;
mod universal;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::distributions::{DistributionSpec, OrderStatSumProblem};
use crate::error::{domain, Error, Result};
use crate::samplers::RngStream;

pub use cmc::{cmc_gg, cmc_lognormal, DEFAULT_BISECT_TOL};
pub use naive::naive_mc;
pub use truncation::{pareto_is, truncation_coefficients, weibull_is};
pub use universal::universal_is;

/// Samples per work chunk.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Output of an estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub estimate: f64,
    /// Sample variance of the single-draw estimator.
    pub variance: f64,
    /// `sqrt(variance) / (estimate sqrt(samples))`; NaN when the estimate is zero.
    pub relative_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub wall_ms: f64,
    pub aux: BTreeMap<String, f64>,
}

impl EstimationResult {
    pub(crate) fn new(estimate: f64, variance: f64, samples: u64, seed: u64) -> Self {
        Self {
            estimate,
            variance,
            relative_error: relative_error(estimate, variance, samples),
            samples,
            seed,
            wall_ms: 0.0,
            aux: BTreeMap::new(),
        }
    }

    pub(crate) fn with_aux(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }

    /// Standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.samples as f64).sqrt()
    }
}

pub fn relative_error(estimate: f64, variance: f64, samples: u64) -> f64 {
    if estimate > 0.0 {
        variance.sqrt() / (estimate * (samples as f64).sqrt())
    } else {
        f64::NAN
    }
}

/// Weights `lambda_k > 0` with `sum lambda_k = 1` defining the convexity bound
/// of the Pareto and Weibull enclosing sets.
#[derive(Debug, Clone, PartialEq)]
pub struct IsWeights(Vec<f64>);

impl IsWeights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(domain("IS weights need at least one entry"));
        }
        if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(domain(format!("IS weights must be positive, got {l}")));
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("IS weights must sum to 1, got {total}")));
        }
        Ok(Self(lambdas))
    }

    /// `lambda_k = 1 / L`.
    pub fn uniform(l: usize) -> Self {
        Self(vec![1.0 / l as f64; l.max(1)])
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `l1 l - l^2`, the exact variance of a truncation-set IS estimator with
/// enclosing-set probability `l1`.
pub fn is_variance_closed_form(l1: f64, l: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&l1) || !(l >= 0.0) {
        return Err(domain(format!("need 0 <= l <= l1 <= 1, got l = {l}, l1 = {l1}")));
    }
    if l > l1 {
        return Err(domain(format!(
            "target probability {l} exceeds enclosing probability {l1}"
        )));
    }
    Ok(l1 * l - l * l)
}

/// Running mean and centered second moment, merged with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    /// Free accumulator for per-draw diagnostics (proposal counts, iterations).
    pub extra: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64, extra: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.extra += extra;
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
            extra: self.extra + other.extra,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        } else {
            0.0
        }
    }
}

/// Runs `draw` `samples` times across chunks. `init` builds per-chunk scratch.
pub(crate) fn simulate<S, I, F>(samples: u64, rng: &RngStream, init: I, draw: F) -> Result<Moments>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut RngStream, &mut S) -> Result<(f64, f64)> + Sync,
{
    if samples == 0 {
        return Err(domain("the number of samples must be at least 1"));
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.substream(c);
            let mut scratch = init();
            let len = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            let mut m = Moments::default();
            for _ in 0..len {
                let (x, extra) = draw(&mut stream, &mut scratch)?;
                m.push(x, extra);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge))
}

pub(crate) fn finish(moments: Moments, rng: &RngStream, started: Instant) -> EstimationResult {
    let mut r = EstimationResult::new(moments.mean.clamp(0.0, 1.0), moments.variance(), moments.n, rng.seed());
    r.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    r
}

/// Sum of the `l` largest entries; reorders `values`.
pub(crate) fn sum_largest(values: &mut [f64], l: usize) -> f64 {
    if l < values.len() {
        values.select_nth_unstable_by(l - 1, |a, b| b.total_cmp(a));
    }
    values[..l].iter().sum()
}

/// Uniform on the open interval `(0, 1)`.
pub(crate) fn open01(rng: &mut RngStream) -> f64 {
    use rand::RngCore;
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn iid_family<'a>(
    problem: &'a OrderStatSumProblem,
    operation: &'static str,
) -> Result<&'a DistributionSpec> {
    problem.iid().ok_or(Error::UnsupportedFamily {
        family: problem.family_label(),
        operation,
    })
}

/// Estimator names accepted by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Naive,
    UniversalIs,
    ParetoIs,
    WeibullIs,
    CmcGg,
    CmcLognormal,
    RqmcCmc,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        Self::Naive,
        Self::UniversalIs,
        Self::ParetoIs,
        Self::WeibullIs,
        Self::CmcGg,
        Self::CmcLognormal,
        Self::RqmcCmc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::UniversalIs => "universal-is",
            Self::ParetoIs => "pareto-is",
            Self::WeibullIs => "weibull-is",
            Self::CmcGg => "cmc-gg",
            Self::CmcLognormal => "cmc-lognormal",
            Self::RqmcCmc => "rqmc-cmc",
        }
    }

    /// Checks that the estimator can run on `problem` without drawing anything.
    pub fn check_compatible(&self, problem: &OrderStatSumProblem) -> Result<()> {
        let unsupported = |operation| Error::UnsupportedFamily {
            family: problem.family_label(),
            operation,
        };
        match self {
            Self::Naive | Self::UniversalIs => Ok(()),
            Self::ParetoIs => match problem.iid() {
                Some(DistributionSpec::ParetoLomax { .. }) => Ok(()),
                _ => Err(unsupported("pareto-is")),
            },
            Self::WeibullIs => match problem.iid() {
                Some(DistributionSpec::Weibull { alpha, .. }) if *alpha < 1.0 => Ok(()),
                Some(DistributionSpec::Weibull { alpha, .. }) => Err(Error::UnsupportedParameter(format!(
                    "weibull-is needs shape alpha < 1, got {alpha}"
                ))),
                _ => Err(unsupported("weibull-is")),
            },
            Self::CmcGg => cmc::gg_parameters(problem).map(|_| ()),
            Self::CmcLognormal => match problem.iid() {
                Some(DistributionSpec::LogNormal { mu, .. }) => {
                    let standardized = problem.threshold() * (-mu).exp();
                    if standardized > 1.0 {
                        Err(Error::ThresholdAboveOne { standardized })
                    } else {
                        Ok(())
                    }
                }
                _ => Err(unsupported("cmc-lognormal")),
            },
            Self::RqmcCmc => match problem.iid() {
                Some(DistributionSpec::Weibull { .. }) => Ok(()),
                _ => Err(unsupported("rqmc-cmc")),
            },
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s.trim()).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            domain(format!("unknown estimator `{s}`, expected one of {}", names.join(", ")))
        })
    }
}
