//! Importance sampling for Pareto and Weibull branches with an enclosing set
//! built from a convexity bound on the exponentially transformed variables.
//!
//! After mapping each branch to a unit exponential `Y_i`, the target event is
//! contained in `S1 = {sum_k w_k Y(k) <= t1}` for explicit weights `w_k` and
//! level `t1`. Writing the order statistics through Rényi spacings turns `S1`
//! into `{sum_i c_i Z_i <= t1}` for i.i.d. unit exponentials `Z_i`, whose
//! probability is a hypoexponential CDF and which can be sampled exactly by
//! acceptance-rejection on the simplex.

use std::time::Instant;

use crate::distributions::{DistributionSpec, OrderStatSumProblem};
use crate::error::{domain, Error, Result};
use crate::samplers::{RngStream, TruncatedExpSampler};
use crate::special::{hypoexp_cdf, HypoexpSpec};

use super::{finish, iid_family, is_variance_closed_form, simulate, EstimationResult, IsWeights};

/// Spacing coefficients `c_i`, `i = 1..N`, for order-statistic weights `w_1..w_L`:
///
/// ```text
/// c_i = (w_1 + ... + w_L) / (N - i + 1)          for i <= N - L + 1
/// c_i = (w_1 + ... + w_{N+1-i}) / (N - i + 1)    otherwise
/// ```
pub fn truncation_coefficients(n: usize, weights: &[f64]) -> Vec<f64> {
    let l = weights.len();
    let total: f64 = weights.iter().sum();
    (1..=n)
        .map(|i| {
            let numer = if i + l <= n + 1 {
                total
            } else {
                weights[..n + 1 - i].iter().sum()
            };
            numer / (n - i + 1) as f64
        })
        .collect()
}

fn check_weights(problem: &OrderStatSumProblem, weights: &IsWeights) -> Result<()> {
    if weights.len() != problem.n_combined() {
        return Err(domain(format!(
            "expected {} IS weights (one per combined branch), got {}",
            problem.n_combined(),
            weights.len()
        )));
    }
    Ok(())
}

struct Plan {
    coeffs: Vec<f64>,
    level: f64,
    ell1: f64,
}

fn run<B>(problem: &OrderStatSumProblem, plan: Plan, samples: u64, rng: &RngStream, back: B) -> Result<EstimationResult>
where
    B: Fn(f64) -> f64 + Sync,
{
    let started = Instant::now();
    let n = problem.n_branches();
    let l = problem.n_combined();
    let gamma = problem.threshold();
    let ell1 = plan.ell1;
    let sampler = TruncatedExpSampler::new(&plan.coeffs, plan.level, l)?;
    let moments = simulate(
        samples,
        rng,
        || (vec![0.0; n], vec![0.0; l]),
        |rng, (z, y)| {
            let proposals = sampler.draw_into(rng, z, y)?;
            let total: f64 = y.iter().map(|&v| back(v)).sum();
            Ok((if total <= gamma { ell1 } else { 0.0 }, proposals as f64))
        },
    )?;
    let acceptance = moments.n as f64 / moments.extra;
    let mut r = finish(moments, rng, started)
        .with_aux("ell1", ell1)
        .with_aux("truncation_level", plan.level)
        .with_aux("acceptance_rate", acceptance);
    if let Ok(v) = is_variance_closed_form(ell1, r.estimate) {
        r = r.with_aux("variance_closed_form", v);
    }
    Ok(r)
}

/// IS estimator for i.i.d. Lomax branches `f(x) = alpha (1+x)^-(1+alpha)`.
///
/// With `Y = alpha log(1+X)` and convexity of `exp`, the enclosing set is
/// `sum_k lambda_k Y(k) <= alpha (log(gamma_th + L) + sum_k lambda_k log lambda_k)`.
/// `IsWeights::uniform(L)` gives bounded relative error.
pub fn pareto_is(
    problem: &OrderStatSumProblem,
    weights: &IsWeights,
    samples: u64,
    rng: &RngStream,
) -> Result<EstimationResult> {
    let alpha = match iid_family(problem, "pareto-is")? {
        DistributionSpec::ParetoLomax { alpha } => *alpha,
        other => {
            return Err(Error::UnsupportedFamily {
                family: other.family(),
                operation: "pareto-is",
            })
        }
    };
    check_weights(problem, weights)?;
    let l = problem.n_combined() as f64;
    let entropy: f64 = weights.lambdas().iter().map(|w| w * w.ln()).sum();
    let level = alpha * ((problem.threshold() + l).ln() + entropy);
    let coeffs = truncation_coefficients(problem.n_branches(), weights.lambdas());
    let ell1 = hypoexp_cdf(&HypoexpSpec::new(coeffs.clone(), level)?)?;
    run(problem, Plan { coeffs, level, ell1 }, samples, rng, |y| {
        (y / alpha).exp_m1()
    })
}

/// IS estimator for i.i.d. Weibull branches with shape `0 < alpha < 1`.
///
/// With `Y = (X/eta)^alpha` and convexity of `y -> y^(1/alpha)`, the enclosing
/// set is `sum_k lambda_k^(1-alpha) Y(k) <= (gamma_th/eta)^alpha`. Any valid
/// weights give bounded relative error.
pub fn weibull_is(
    problem: &OrderStatSumProblem,
    weights: &IsWeights,
    samples: u64,
    rng: &RngStream,
) -> Result<EstimationResult> {
    let (alpha, eta) = match iid_family(problem, "weibull-is")? {
        DistributionSpec::Weibull { alpha, eta } => (*alpha, *eta),
        other => {
            return Err(Error::UnsupportedFamily {
                family: other.family(),
                operation: "weibull-is",
            })
        }
    };
    if alpha >= 1.0 {
        return Err(Error::UnsupportedParameter(format!(
            "weibull-is needs shape alpha < 1, got {alpha}"
        )));
    }
    check_weights(problem, weights)?;
    let tilted: Vec<f64> = weights.lambdas().iter().map(|w| w.powf(1.0 - alpha)).collect();
    let coeffs = truncation_coefficients(problem.n_branches(), &tilted);
    let level = (problem.threshold() / eta).powf(alpha);
    let ell1 = hypoexp_cdf(&HypoexpSpec::new(coeffs.clone(), level)?)?;
    run(problem, Plan { coeffs, level, ell1 }, samples, rng, |y| {
        eta * y.powf(1.0 / alpha)
    })
}
