use std::time::Instant;

use crate::distributions::{Branches, OrderStatSumProblem};
use crate::error::Result;
use crate::samplers::RngStream;

use super::{finish, is_variance_closed_form, open01, simulate, sum_largest, EstimationResult};

/// Importance sampling with the enclosing set `{max_i X_i <= gamma_th}`.
///
/// Each branch is drawn from its law truncated to `[0, gamma_th]` by inversion,
/// and a replicate scores `l1 = prod_i F_i(gamma_th)` when the top-`L` sum is
/// below the threshold. Works for any family and for independent,
/// non-identical branches.
pub fn universal_is(problem: &OrderStatSumProblem, samples: u64, rng: &RngStream) -> Result<EstimationResult> {
    let started = Instant::now();
    let n = problem.n_branches();
    let l = problem.n_combined();
    let gamma = problem.threshold();

    let mass: Vec<f64> = (0..n).map(|i| problem.branch(i).cdf(gamma)).collect::<Result<_>>()?;
    let l1: f64 = mass.iter().product();
    if l1 == 0.0 {
        if samples == 0 {
            return Err(crate::error::domain("the number of samples must be at least 1"));
        }
        let mut r = EstimationResult::new(0.0, 0.0, samples, rng.seed())
            .with_aux("ell1", 0.0)
            .with_aux("degenerate", 1.0);
        r.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        return Ok(r);
    }

    let moments = simulate(
        samples,
        rng,
        || vec![0.0; n],
        |rng, x| {
            for (i, v) in x.iter_mut().enumerate() {
                let u = mass[i] * open01(rng);
                *v = problem.branch(i).quantile(u)?.min(gamma);
            }
            let hit = sum_largest(x, l) <= gamma;
            Ok((if hit { l1 } else { 0.0 }, 0.0))
        },
    )?;
    let mut r = finish(moments, rng, started).with_aux("ell1", l1);
    if let Ok(v) = is_variance_closed_form(l1, r.estimate) {
        r = r.with_aux("variance_closed_form", v);
    }
    if let Branches::Iid(d) = problem.branches() {
        // ratio whose boundedness as gamma_th -> 0 gives bounded relative error
        let inner = d.cdf(gamma / l as f64)?;
        if inner > 0.0 {
            r = r.with_aux("tail_ratio", mass[0] / inner);
        }
    }
    Ok(r)
}
