//! Randomized quasi-Monte Carlo for the Weibull conditional estimator.
//!
//! Each replicate pushes `M` scrambled Sobol points through
//! [`cube_to_ordered_simplex`] and averages the conditional estimator. A plan
//! with `N` branches uses an `N`-dimensional sequence, one coordinate per
//! exponential spacing.

mod sobol;

pub use sobol::{owen_scramble, ScrambledSobol, Sobol, MAX_DIMENSION};

use std::time::Instant;

use rayon::prelude::*;

use crate::distributions::{DistributionSpec, OrderStatSumProblem};
use crate::error::{domain, Error, Result};
use crate::estimators::cmc::gg_parameters;
use crate::estimators::{iid_family, EstimationResult};
use crate::samplers::{splitmix64, RngStream, SimplexPoint};

/// Default number of independent randomizations.
pub const DEFAULT_REPLICATES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RqmcPlan {
    /// Points per replicate, a power of two.
    pub points_per_replicate: u32,
    pub replicates: usize,
    /// Cube dimension, equal to the number of branches.
    pub dimension: usize,
    pub scramble_seed: u64,
}

impl RqmcPlan {
    pub fn new(points_per_replicate: u32, replicates: usize, dimension: usize, scramble_seed: u64) -> Result<Self> {
        let plan = Self {
            points_per_replicate,
            replicates,
            dimension,
            scramble_seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan sized for `problem` with the default replicate count.
    pub fn for_problem(problem: &OrderStatSumProblem, points_per_replicate: u32, scramble_seed: u64) -> Result<Self> {
        Self::new(
            points_per_replicate,
            DEFAULT_REPLICATES,
            problem.n_branches(),
            scramble_seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_replicate < 2 || !self.points_per_replicate.is_power_of_two() {
            return Err(domain(format!(
                "points per replicate must be a power of two >= 2, got {}",
                self.points_per_replicate
            )));
        }
        if self.replicates < 2 {
            return Err(domain(format!("need at least 2 replicates, got {}", self.replicates)));
        }
        if self.dimension == 0 || self.dimension > MAX_DIMENSION {
            return Err(domain(format!(
                "cube dimension must be in 1..={MAX_DIMENSION}, got {}",
                self.dimension
            )));
        }
        Ok(())
    }

    pub fn total_points(&self) -> u64 {
        u64::from(self.points_per_replicate) * self.replicates as u64
    }

    fn replicate_seed(&self, replicate: usize) -> u64 {
        splitmix64(self.scramble_seed ^ splitmix64(replicate as u64))
    }
}

/// Maps a point of `[0,1)^n` to the `(n+1)`-part simplex by sorting the
/// coordinates as cut points of `[0,1]` and taking the gaps.
///
/// `(0.5, 0.5)` maps to `[0.5, 0, 0.5]`.
pub fn cube_to_simplex(u: &[f64]) -> Result<SimplexPoint> {
    let mut out = vec![0.0; u.len() + 1];
    cube_to_simplex_into(u, &mut out)?;
    Ok(SimplexPoint(out))
}

fn cube_to_simplex_into(u: &[f64], out: &mut [f64]) -> Result<()> {
    let n = u.len();
    if let Some(bad) = u.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(domain(format!("cube coordinates must lie in [0, 1), got {bad}")));
    }
    out[..n].copy_from_slice(u);
    out[n] = 1.0;
    out.sort_unstable_by(f64::total_cmp);
    let mut prev = 0.0;
    for v in out.iter_mut() {
        let cut = *v;
        *v = cut - prev;
        prev = cut;
    }
    Ok(())
}

/// Maps a point of `[0,1)^n` to the `n`-part simplex with coordinates in
/// decreasing order, distributed as the order statistics of a uniform simplex
/// point.
///
/// Coordinate `i` becomes the spacing `-ln(1 - u_i) / (n - i)` of sorted
/// exponentials, so the map is smooth and needs no sort.
pub fn cube_to_ordered_simplex(u: &[f64]) -> Result<SimplexPoint> {
    let mut out = vec![0.0; u.len()];
    cube_to_ordered_simplex_into(u, &mut out)?;
    Ok(SimplexPoint(out))
}

fn cube_to_ordered_simplex_into(u: &[f64], out: &mut [f64]) -> Result<()> {
    let n = u.len();
    if let Some(bad) = u.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(domain(format!("cube coordinates must lie in [0, 1), got {bad}")));
    }
    let mut level = 0.0;
    let mut total = 0.0;
    for (i, x) in u.iter().enumerate() {
        level += -(-x).ln_1p() / (n - i) as f64;
        out[n - 1 - i] = level;
        total += level;
    }
    if total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    } else {
        out.fill(1.0 / n as f64);
    }
    Ok(())
}

enum Points<'a> {
    Sobol(&'a ScrambledSobol),
    Pseudo(Box<RngStream>),
}

fn weibull_problem(problem: &OrderStatSumProblem, plan: &RqmcPlan) -> Result<()> {
    match iid_family(problem, "rqmc-cmc")? {
        DistributionSpec::Weibull { .. } => {}
        other => {
            return Err(Error::UnsupportedFamily {
                family: other.family(),
                operation: "rqmc-cmc",
            })
        }
    }
    plan.validate()?;
    if plan.dimension != problem.n_branches() {
        return Err(domain(format!(
            "plan dimension {} does not match {} branches",
            plan.dimension,
            problem.n_branches()
        )));
    }
    Ok(())
}

fn replicate_mean(problem: &OrderStatSumProblem, plan: &RqmcPlan, mut points: Points<'_>) -> Result<f64> {
    use rand::Rng;
    let params = gg_parameters(problem)?;
    let n = problem.n_branches();
    let l = problem.n_combined();
    let gamma = problem.threshold();
    let mut bits = vec![0u32; plan.dimension];
    let mut u = vec![0.0; plan.dimension];
    let mut s = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..plan.points_per_replicate {
        match &mut points {
            Points::Sobol(seq) => seq.point(i, &mut bits, &mut u),
            Points::Pseudo(rng) => u.iter_mut().for_each(|x| *x = rng.random::<f64>()),
        }
        cube_to_ordered_simplex_into(&u, &mut s)?;
        total += params.conditional(&mut s, l, gamma)?;
    }
    Ok(total / f64::from(plan.points_per_replicate))
}

fn summarize(means: Vec<f64>, plan: &RqmcPlan, started: Instant) -> EstimationResult {
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let variance = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let mut r = EstimationResult::new(mean, variance, means.len() as u64, plan.scramble_seed)
        .with_aux("points_per_replicate", f64::from(plan.points_per_replicate))
        .with_aux("total_points", plan.total_points() as f64);
    for (k, x) in means.iter().enumerate() {
        r = r.with_aux(&format!("replicate_{k:03}"), *x);
    }
    r.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    r
}

/// RQMC version of the Weibull conditional estimator.
///
/// `estimate` is the mean of the replicate means and `variance` their sample
/// variance, so `samples` holds the replicate count and the standard error is
/// `sqrt(variance / m)`. Replicate means are in `aux` as `replicate_000`, ...
pub fn rqmc_estimate(problem: &OrderStatSumProblem, plan: &RqmcPlan) -> Result<EstimationResult> {
    let started = Instant::now();
    weibull_problem(problem, plan)?;
    let means = (0..plan.replicates)
        .into_par_iter()
        .map(|k| {
            let seq = ScrambledSobol::new(plan.dimension, plan.replicate_seed(k))?;
            replicate_mean(problem, plan, Points::Sobol(&seq))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(means, plan, started))
}

/// Same replicate structure as [`rqmc_estimate`] with pseudo-random cube
/// points, as a plain Monte Carlo control.
pub fn mc_replicate_estimate(problem: &OrderStatSumProblem, plan: &RqmcPlan) -> Result<EstimationResult> {
    let started = Instant::now();
    weibull_problem(problem, plan)?;
    let root = RngStream::new(plan.scramble_seed, 0x6d63);
    let means = (0..plan.replicates)
        .into_par_iter()
        .map(|k| replicate_mean(problem, plan, Points::Pseudo(Box::new(root.substream(k as u64)))))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(means, plan, started))
}
