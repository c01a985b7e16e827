use std::time::Instant;

use crate::distributions::OrderStatSumProblem;
use crate::error::Result;
use crate::samplers::RngStream;

use super::{finish, simulate, sum_largest, EstimationResult};

/// Crude Monte Carlo: the fraction of replicates with `sum_{k<=L} X(k) <= gamma_th`.
pub fn naive_mc(problem: &OrderStatSumProblem, samples: u64, rng: &RngStream) -> Result<EstimationResult> {
    let started = Instant::now();
    let n = problem.n_branches();
    let l = problem.n_combined();
    let gamma = problem.threshold();
    let moments = simulate(
        samples,
        rng,
        || vec![0.0; n],
        |rng, x| {
            for (i, v) in x.iter_mut().enumerate() {
                *v = problem.branch(i).sample(rng);
            }
            let hit = sum_largest(x, l) <= gamma;
            Ok((if hit { 1.0 } else { 0.0 }, 0.0))
        },
    )?;
    Ok(finish(moments, rng, started))
}
