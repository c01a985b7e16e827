//! Dispatch of configured experiments to the estimators.

use ordsum::estimators::{self, EstimatorKind};
use ordsum::rqmc::{mc_replicate_estimate, rqmc_estimate};
use ordsum::{EstimationResult, IsWeights, OrderStatSumProblem, RngStream};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::ResultRow;

/// Stream id of an estimator, fixed by its position in [`EstimatorKind::ALL`]
/// so a cell does not depend on which other estimators are configured.
pub fn stream_id(kind: EstimatorKind) -> u64 {
    EstimatorKind::ALL.iter().position(|k| *k == kind).expect("listed") as u64
}

/// Runs one estimator on one problem.
pub fn run_cell(
    config: &ExperimentConfig,
    problem: &OrderStatSumProblem,
    kind: EstimatorKind,
) -> Result<EstimationResult> {
    let rng = RngStream::new(config.seed, stream_id(kind));
    let m = config.samples;
    let result = match kind {
        EstimatorKind::Naive => estimators::naive_mc(problem, m, &rng),
        EstimatorKind::UniversalIs => estimators::universal_is(problem, m, &rng),
        EstimatorKind::ParetoIs => estimators::pareto_is(problem, &IsWeights::uniform(config.l), m, &rng),
        EstimatorKind::WeibullIs => {
            let weights = config.weights.clone().unwrap_or_else(|| IsWeights::uniform(config.l));
            estimators::weibull_is(problem, &weights, m, &rng)
        }
        EstimatorKind::CmcGg => estimators::cmc_gg(problem, m, &rng),
        EstimatorKind::CmcLognormal => estimators::cmc_lognormal(problem, m, &rng, config.bisect_tol),
        EstimatorKind::RqmcCmc => rqmc_estimate(problem, &config.rqmc_plan(m)?),
    };
    Ok(result?)
}

/// One row per `(threshold, estimator)`, thresholds outermost, in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.thresholds.len() * config.estimators.len());
    for &t in &config.thresholds {
        let problem = config.problem(t)?;
        for &kind in &config.estimators {
            let result = run_cell(config, &problem, kind)?;
            rows.push(ResultRow::new(t, kind, &result, config.timing));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub points: u32,
    /// Standard error of the RQMC estimate, `sqrt(var / m)` over replicates.
    pub rqmc_se: f64,
    /// Same with pseudo-random points.
    pub mc_se: f64,
    /// `M^-1/2` line through the first plain-MC point.
    pub mc_reference: f64,
    pub rqmc_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub rqmc_slope: f64,
    pub mc_slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(HarnessError::config("grid", "a slope needs at least 3 points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(HarnessError::Format("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// RQMC convergence sweep over `config.grid`, with a pseudo-random control.
pub fn run_convergence_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    if config.estimators != [EstimatorKind::RqmcCmc] {
        return Err(HarnessError::config("estimators", "the sweep runs rqmc-cmc only"));
    }
    if config.thresholds.len() != 1 {
        return Err(HarnessError::config(
            "thresholds",
            "the sweep needs exactly one threshold",
        ));
    }
    if config.grid.len() < 3 {
        return Err(HarnessError::config("grid", "a slope needs at least 3 points"));
    }
    let problem = config.problem(config.thresholds[0])?;
    let mut rows = Vec::with_capacity(config.grid.len());
    for &points in &config.grid {
        let plan = config.rqmc_plan(u64::from(points)).map_err(|e| match e {
            HarnessError::Config { message, .. } => HarnessError::config("grid", message),
            other => other,
        })?;
        let q = rqmc_estimate(&problem, &plan)?;
        let c = mc_replicate_estimate(&problem, &plan)?;
        rows.push(SweepRow {
            points,
            rqmc_se: q.std_error(),
            mc_se: c.std_error(),
            mc_reference: 0.0,
            rqmc_estimate: q.estimate,
        });
    }
    let (m0, se0) = (f64::from(rows[0].points), rows[0].mc_se);
    for r in &mut rows {
        r.mc_reference = se0 * (m0 / f64::from(r.points)).sqrt();
    }
    let xs: Vec<f64> = rows.iter().map(|r| f64::from(r.points)).collect();
    let rq: Vec<f64> = rows.iter().map(|r| r.rqmc_se).collect();
    let mc: Vec<f64> = rows.iter().map(|r| r.mc_se).collect();
    Ok(SweepTable {
        rqmc_slope: log_log_slope(&xs, &rq)?,
        mc_slope: log_log_slope(&xs, &mc)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigLayer;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_layer(ConfigLayer::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.7)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 0.7).abs() < 1e-12);
        assert!(log_log_slope(&xs[..2], &ys[..2]).is_err());
    }

    #[test]
    fn rows_follow_config_order() {
        let c = config(
            "dist = \"weibull(alpha=0.5,eta=1)\"\nn = 4\nl = 2\nthresholds = [0.5, 0.2]\n\
             estimators = [\"cmc-gg\", \"universal-is\"]\nsamples = 2000\nseed = 3",
        );
        let rows = run_experiment(&c).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.gamma_th, r.estimator.as_str())).collect();
        assert_eq!(
            keys,
            [
                (0.5, "cmc-gg"),
                (0.5, "universal-is"),
                (0.2, "cmc-gg"),
                (0.2, "universal-is")
            ]
        );
        assert!(rows.iter().all(|r| r.wall_ms.is_none() && r.seed == 3));
    }

    #[test]
    fn cell_does_not_depend_on_other_estimators() {
        let base = "dist = \"weibull(alpha=0.5,eta=1)\"\nn = 4\nl = 2\nthresholds = [0.5]\nsamples = 3000\n";
        let alone = run_experiment(&config(&format!("{base}estimators = [\"cmc-gg\"]"))).unwrap();
        let both = run_experiment(&config(&format!("{base}estimators = [\"naive\", \"cmc-gg\"]"))).unwrap();
        assert_eq!(alone[0], both[1]);
    }

    #[test]
    fn sweep_needs_three_points() {
        let c = config(
            "dist = \"weibull(alpha=0.5,eta=1)\"\nn = 4\nl = 2\nthresholds = [0.5]\nestimators = [\"rqmc-cmc\"]\n\
             samples = 64\nreplicates = 4\ngrid = [64]",
        );
        assert!(matches!(
            run_convergence_sweep(&c),
            Err(HarnessError::Config { field: "grid", .. })
        ));
    }

    #[test]
    fn small_sweep() {
        let c = config(
            "dist = \"weibull(alpha=0.5,eta=1)\"\nn = 4\nl = 2\nthresholds = [0.5]\nestimators = [\"rqmc-cmc\"]\n\
             samples = 64\nreplicates = 8\ngrid = [64, 128, 256, 512]",
        );
        let s = run_convergence_sweep(&c).unwrap();
        assert_eq!(s.rows.len(), 4);
        assert!(s.rqmc_slope < s.mc_slope);
        assert_eq!(s.rows[0].mc_reference, s.rows[0].mc_se);
    }
}
