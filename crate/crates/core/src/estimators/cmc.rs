//! Conditional Monte Carlo estimators.

use std::time::Instant;

use crate::distributions::{Branches, DistributionSpec, OrderStatSumProblem};
use crate::error::{domain, Error, Result};
use crate::samplers::{fill_dirichlet, fill_negative_orthant, RngStream};
use crate::special::{chi_sf, reg_lower_gamma};

use super::{finish, iid_family, simulate, sum_largest, EstimationResult};

/// Default relative tolerance on the radius root in [`cmc_lognormal`].
pub const DEFAULT_BISECT_TOL: f64 = 1e-10;

const BISECT_CAP: u64 = 200;

/// Generalized gamma parameters shared by every branch, with per-branch `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GgParameters {
    pub d: Vec<f64>,
    pub p: f64,
    pub a: f64,
}

impl GgParameters {
    pub fn dirichlet(&self) -> Vec<f64> {
        self.d.iter().map(|d| d / self.p).collect()
    }

    pub fn total_shape(&self) -> f64 {
        self.d.iter().sum::<f64>() / self.p
    }

    /// `P(top-L sum <= gamma_th | S = s)` for a point `s` on the simplex; reorders `s`.
    pub fn conditional(&self, s: &mut [f64], l: usize, gamma: f64) -> Result<f64> {
        let inv_p = 1.0 / self.p;
        s.iter_mut().for_each(|v| *v = v.powf(inv_p));
        let t = sum_largest(s, l);
        reg_lower_gamma(self.total_shape(), (gamma / (self.a * t)).powf(self.p))
    }
}

pub(crate) fn gg_parameters(problem: &OrderStatSumProblem) -> Result<GgParameters> {
    let unsupported = || Error::UnsupportedFamily {
        family: problem.family_label(),
        operation: "cmc-gg",
    };
    match problem.branches() {
        Branches::Iid(dist) => {
            let (d, p, a) = dist.as_generalized_gamma().ok_or_else(unsupported)?;
            Ok(GgParameters {
                d: vec![d; problem.n_branches()],
                p,
                a,
            })
        }
        Branches::Independent(dists) => {
            let mut params = dists.iter().map(|x| x.as_generalized_gamma().ok_or_else(unsupported));
            let (d0, p, a) = params.next().ok_or_else(unsupported)??;
            let mut d = vec![d0];
            for item in params {
                let (di, pi, ai) = item?;
                if pi != p || ai != a {
                    return Err(Error::UnsupportedParameter(format!(
                        "cmc-gg needs a shared power p and scale a across branches, got (p={pi}, a={ai}) next to (p={p}, a={a})"
                    )));
                }
                d.push(di);
            }
            Ok(GgParameters { d, p, a })
        }
    }
}

/// Conditional MC for generalized gamma branches `X_i = a G_i^(1/p)`, `G_i ~ Gamma(d_i/p)`.
///
/// Conditioning on the direction `S = G / sum(G)`, which is Dirichlet and
/// independent of `V = sum(G)`, leaves the smooth estimator
/// `P(V <= (gamma_th / (a t))^p)` with `t = sum_{k<=L} (S(k))^(1/p)`.
/// Weibull, exponential and gamma branches are handled as special cases.
pub fn cmc_gg(problem: &OrderStatSumProblem, samples: u64, rng: &RngStream) -> Result<EstimationResult> {
    let started = Instant::now();
    let params = gg_parameters(problem)?;
    let gammas = params
        .dirichlet()
        .into_iter()
        .map(|c| rand_distr::Gamma::new(c, 1.0).map_err(|_| domain(format!("invalid Dirichlet parameter {c}"))))
        .collect::<Result<Vec<_>>>()?;
    let n = problem.n_branches();
    let l = problem.n_combined();
    let gamma = problem.threshold();
    let moments = simulate(
        samples,
        rng,
        || vec![0.0; n],
        |rng, s| {
            fill_dirichlet(rng, &gammas, s)?;
            Ok((params.conditional(s, l, gamma)?, 0.0))
        },
    )?;
    Ok(finish(moments, rng, started))
}

/// Root `r` of `sum_k exp(sigma r theta_k) = target` over the `L` largest
/// entries of a negative direction. Returns `(r, iterations)`; reorders `theta`.
pub(crate) fn lognormal_radius(theta: &mut [f64], l: usize, sigma: f64, target: f64, tol: f64) -> Result<(f64, u64)> {
    if l < theta.len() {
        theta.select_nth_unstable_by(l - 1, |a, b| b.total_cmp(a));
    }
    let top = &theta[..l];
    let first = top.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = top.iter().copied().fold(f64::INFINITY, f64::min);
    let log_ratio = (target / l as f64).ln();
    let mut lo = log_ratio / (sigma * last);
    let mut hi = log_ratio / (sigma * first);
    let f = |r: f64| top.iter().map(|t| (sigma * r * t).exp()).sum::<f64>() - target;
    let slack = 1e-9 * target;
    if !(f(lo) >= -slack && f(hi) <= slack) {
        return Err(Error::Bracket { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > tol * hi.abs().max(1.0) {
        if iterations == BISECT_CAP {
            return Err(Error::Numerical(format!(
                "bisection did not converge in {BISECT_CAP} steps"
            )));
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), iterations))
}

/// Conditional MC for i.i.d. log-normal branches.
///
/// Writing the standardized normals as `R Theta` with `R` chi distributed and
/// `Theta` on the unit sphere, the event forces `Theta` into the negative
/// orthant (probability `2^-N`), and given `Theta` it reduces to
/// `R >= r(Theta)` where `r` is found by bisection between the closed-form
/// bounds. Requires `gamma_th e^-mu <= 1`.
pub fn cmc_lognormal(
    problem: &OrderStatSumProblem,
    samples: u64,
    rng: &RngStream,
    bisect_tol: f64,
) -> Result<EstimationResult> {
    let started = Instant::now();
    let (mu, sigma) = match iid_family(problem, "cmc-lognormal")? {
        DistributionSpec::LogNormal { mu, sigma } => (*mu, *sigma),
        other => {
            return Err(Error::UnsupportedFamily {
                family: other.family(),
                operation: "cmc-lognormal",
            })
        }
    };
    if !(bisect_tol > 0.0) {
        return Err(domain(format!(
            "bisection tolerance must be positive, got {bisect_tol}"
        )));
    }
    let target = problem.threshold() * (-mu).exp();
    if target > 1.0 {
        return Err(Error::ThresholdAboveOne { standardized: target });
    }
    let n = problem.n_branches();
    let l = problem.n_combined();
    let dof = u32::try_from(n).map_err(|_| domain("too many branches"))?;
    let orthant = 0.5f64.powi(dof as i32);
    let moments = simulate(
        samples,
        rng,
        || vec![0.0; n],
        |rng, theta| {
            fill_negative_orthant(rng, theta);
            let (r, iterations) = lognormal_radius(theta, l, sigma, target, bisect_tol)?;
            Ok((orthant * chi_sf(r.max(0.0), dof)?, iterations as f64))
        },
    )?;
    let mean_iterations = moments.extra / moments.n as f64;
    Ok(finish(moments, rng, started).with_aux("mean_bisection_iterations", mean_iterations))
}
