//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ordsum::estimators::{cmc_gg, cmc_lognormal, naive_mc, pareto_is, universal_is, weibull_is, DEFAULT_BISECT_TOL};
use ordsum::rqmc::{rqmc_estimate, RqmcPlan};
use ordsum::special::{gamma_cdf, hypoexp_cdf, normal_cdf, HypoexpSpec};
use ordsum::{DistributionSpec, EstimationResult, IsWeights, OrderStatSumProblem, RngStream};
use ordsum_harness::verify::read_references;
use ordsum_harness::{run_convergence_sweep, run_experiment, verify, ConfigLayer, ExperimentConfig, ResultRow};
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_layer(ConfigLayer::load(name).unwrap()).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Runs a preset and checks every cell against its reference file.
fn reproduce(name: &str) -> (Vec<ResultRow>, Vec<String>, Duration) {
    let (rows, elapsed) = timed(|| run_experiment(&preset(name)).unwrap());
    let refs = read_references(&Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("references/{name}.csv"))).unwrap();
    let failures = verify(&rows, &refs)
        .into_iter()
        .filter(|c| !c.pass)
        .map(|c| {
            format!(
                "{} at {}: {:.4e} vs {:.3e} ({:.2}x tolerance)",
                c.estimator,
                c.gamma_th,
                c.estimate,
                c.reference,
                c.score()
            )
        })
        .collect();
    (rows, failures, elapsed)
}

fn re(rows: &[ResultRow], estimator: &str, gamma: f64) -> f64 {
    rows.iter()
        .find(|r| r.estimator == estimator && r.gamma_th == gamma)
        .map(|r| r.relative_error_percent)
        .unwrap_or_else(|| panic!("no row for {estimator} at {gamma}"))
}

fn summary(failures: &[String], checks: &[(bool, String)], elapsed: Duration, budget: Duration) -> Outcome {
    let mut notes: Vec<String> = failures.to_vec();
    notes.extend(checks.iter().filter(|(ok, _)| !ok).map(|(_, s)| s.clone()));
    let in_time = elapsed <= budget;
    if !in_time {
        notes.push(format!("took {elapsed:.1?}, budget {budget:?}"));
    }
    let pass = notes.is_empty();
    let detail = if pass && budget == Duration::MAX {
        format!("{} checks", checks.len())
    } else if pass {
        format!("{} extra checks, {elapsed:.1?}", checks.len())
    } else {
        notes.join("; ")
    };
    Outcome::new(pass, detail)
}

fn table1() -> Outcome {
    let (rows, failures, elapsed) = reproduce("table1");
    let grid = [1.5, 1.0, 0.5, 0.1];
    let res: Vec<f64> = grid.iter().map(|&g| re(&rows, "pareto-is", g)).collect();
    let checks = vec![
        (res[3] < 0.1, format!("pareto-is RE at 0.1 is {:.4}%", res[3])),
        (
            res.windows(2).all(|w| w[1] < w[0]),
            format!("pareto-is RE not decreasing: {res:?}"),
        ),
    ];
    summary(&failures, &checks, elapsed, Duration::from_secs(120))
}

fn table2() -> Outcome {
    let (rows, failures, elapsed) = reproduce("table2");
    let (is, cmc, uni) = (
        re(&rows, "weibull-is", 0.005),
        re(&rows, "cmc-gg", 0.005),
        re(&rows, "universal-is", 0.005),
    );
    let checks = vec![(
        is < cmc && cmc < uni,
        format!("RE ordering at 0.005: IS {is}, CMC {cmc}, universal {uni}"),
    )];
    summary(&failures, &checks, elapsed, Duration::from_secs(300))
}

fn regimes() -> Outcome {
    let mut checks = Vec::new();
    for (name, is_better) in [("table4", true), ("table5", false)] {
        let config = preset(name);
        let rows = run_experiment(&config).unwrap();
        for &g in &config.thresholds {
            let (is, cmc) = (re(&rows, "weibull-is", g), re(&rows, "cmc-gg", g));
            let ok = if is_better { is < cmc } else { cmc < is };
            checks.push((ok, format!("{name} at {g}: IS RE {is:.4}%, CMC RE {cmc:.4}%")));
        }
    }
    summary(&[], &checks, Duration::ZERO, Duration::MAX)
}

fn table6() -> Outcome {
    let (rows, failures, elapsed) = reproduce("table6");
    let (u1, c1) = (re(&rows, "universal-is", 1.0), re(&rows, "cmc-lognormal", 1.0));
    let (u2, c2) = (re(&rows, "universal-is", 0.15), re(&rows, "cmc-lognormal", 0.15));
    let checks = vec![
        (c1 < u1, format!("at 1: CMC RE {c1:.3}% not below universal {u1:.3}%")),
        (
            u2 < c2,
            format!("at 0.15: universal RE {u2:.3}% not below CMC {c2:.3}%"),
        ),
    ];
    summary(&failures, &checks, elapsed, Duration::from_secs(300))
}

fn variance_identity() -> Outcome {
    let m = 1_000_000;
    let rng = RngStream::new(2, 0);
    let w = OrderStatSumProblem::new(3, 2, 0.3, DistributionSpec::Weibull { alpha: 0.5, eta: 1.0 }).unwrap();
    let p = OrderStatSumProblem::new(4, 2, 1.0, DistributionSpec::ParetoLomax { alpha: 1.0 }).unwrap();
    let runs = [
        ("universal-is", universal_is(&w, m, &rng).unwrap()),
        ("pareto-is", pareto_is(&p, &IsWeights::uniform(2), m, &rng).unwrap()),
        ("weibull-is", weibull_is(&w, &IsWeights::uniform(2), m, &rng).unwrap()),
    ];
    let checks: Vec<_> = runs
        .iter()
        .map(|(name, r)| {
            let closed = r.aux["ell1"] * r.estimate - r.estimate * r.estimate;
            let gap = (r.variance - closed).abs() / r.variance;
            (gap <= 0.05, format!("{name}: relative gap {gap:.3e}"))
        })
        .collect();
    summary(&[], &checks, Duration::ZERO, Duration::MAX)
}

fn zero_variance() -> Outcome {
    let rng = RngStream::new(3, 0);
    let m = 100_000;
    let weibull = |alpha| DistributionSpec::Weibull { alpha, eta: 1.0 };
    let cases: [(&str, EstimationResult, f64); 4] = [
        (
            "universal-is L=1",
            universal_is(&OrderStatSumProblem::new(5, 1, 0.4, weibull(0.5)).unwrap(), m, &rng).unwrap(),
            weibull(0.5).cdf(0.4).unwrap().powi(5),
        ),
        (
            "pareto-is N=L=1",
            pareto_is(
                &OrderStatSumProblem::new(1, 1, 2.0, DistributionSpec::ParetoLomax { alpha: 1.0 }).unwrap(),
                &IsWeights::uniform(1),
                m,
                &rng,
            )
            .unwrap(),
            2.0 / 3.0,
        ),
        (
            "cmc-gg alpha=1 L=N",
            cmc_gg(&OrderStatSumProblem::new(6, 6, 2.5, weibull(1.0)).unwrap(), m, &rng).unwrap(),
            gamma_cdf(2.5, 6.0, 1.0).unwrap(),
        ),
        (
            "cmc-lognormal N=L=1",
            cmc_lognormal(
                &OrderStatSumProblem::new(1, 1, 0.4, DistributionSpec::LogNormal { mu: 0.0, sigma: 1.0 }).unwrap(),
                m,
                &rng,
                DEFAULT_BISECT_TOL,
            )
            .unwrap(),
            normal_cdf(0.4f64.ln()),
        ),
    ];
    let checks: Vec<_> = cases
        .iter()
        .map(|(name, r, exact)| {
            let ok = r.variance < 1e-30 && (r.estimate - exact).abs() <= 1e-13 * exact;
            (
                ok,
                format!("{name}: variance {:e}, estimate {} vs {exact}", r.variance, r.estimate),
            )
        })
        .collect();
    summary(&[], &checks, Duration::ZERO, Duration::MAX)
}

fn hypoexp_closed_form(betas: &[f64], t: f64) -> f64 {
    let tail: f64 = betas
        .iter()
        .enumerate()
        .map(|(i, bi)| {
            let weight: f64 = betas
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, bj)| bi / (bi - bj))
                .product();
            weight * (-t / bi).exp()
        })
        .sum();
    1.0 - tail
}

fn oracle() -> Outcome {
    let p = OrderStatSumProblem::new(3, 2, 0.3, DistributionSpec::Weibull { alpha: 0.5, eta: 1.0 }).unwrap();
    let truth = naive_mc(&p, 100_000_000, &RngStream::new(77, 0)).unwrap();
    let rng = RngStream::new(78, 0);
    let m = 1_000_000;
    let runs = [
        ("naive", naive_mc(&p, m, &rng).unwrap()),
        ("universal-is", universal_is(&p, m, &rng).unwrap()),
        ("weibull-is", weibull_is(&p, &IsWeights::uniform(2), m, &rng).unwrap()),
        ("cmc-gg", cmc_gg(&p, m, &rng).unwrap()),
        (
            "rqmc-cmc",
            rqmc_estimate(&p, &RqmcPlan::new(1 << 15, 30, 3, 78).unwrap()).unwrap(),
        ),
    ];
    let mut checks: Vec<_> = runs
        .iter()
        .map(|(name, r)| {
            let se = (r.std_error().powi(2) + truth.std_error().powi(2)).sqrt();
            let z = (r.estimate - truth.estimate).abs() / se;
            (
                z <= 3.0,
                format!("{name}: {} vs oracle {} ({z:.2} SE)", r.estimate, truth.estimate),
            )
        })
        .collect();

    let betas = [0.5, 1.0, 2.0, 3.5];
    let mut draws = RngStream::new(79, 0);
    for t in [0.3, 1.0, 3.0, 8.0] {
        let cdf = hypoexp_cdf(&HypoexpSpec::new(betas.to_vec(), t).unwrap()).unwrap();
        let closed = hypoexp_closed_form(&betas, t);
        checks.push((
            (cdf - closed).abs() <= 1e-9,
            format!("hypoexp at {t}: {cdf} vs closed form {closed}"),
        ));
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| betas.iter().map(|b| -b * (-draws.random::<f64>()).ln_1p()).sum::<f64>() <= t)
            .count();
        let freq = hits as f64 / n as f64;
        let se = (freq * (1.0 - freq) / n as f64).sqrt();
        checks.push((
            (freq - cdf).abs() <= 3.0 * se,
            format!("hypoexp at {t}: simulated {freq} vs {cdf}"),
        ));
    }
    summary(&[], &checks, Duration::ZERO, Duration::MAX)
}

fn rqmc_rate() -> Outcome {
    let (sweep, elapsed) = timed(|| run_convergence_sweep(&preset("fig1")).unwrap());
    let checks = vec![
        (sweep.rqmc_slope <= -0.75, format!("rqmc slope {:.3}", sweep.rqmc_slope)),
        (
            (-0.6..=-0.4).contains(&sweep.mc_slope),
            format!("mc slope {:.3}", sweep.mc_slope),
        ),
    ];
    let mut out = summary(&[], &checks, elapsed, Duration::from_secs(180));
    out.detail = format!(
        "rqmc slope {:.3}, mc slope {:.3}; {}",
        sweep.rqmc_slope, sweep.mc_slope, out.detail
    );
    out
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_ordsum"))
            .args(["table", "table2", "--seed", "42"])
            .env_remove("ORDSUM_SEED")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let ok = a.status.success() && b.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout;
    Outcome::new(
        ok,
        format!("{} bytes, identical: {}", a.stdout.len(), a.stdout == b.stdout),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("table1 preset", table1),
        ("table2 preset", table2),
        ("L=2 / L=6 regimes", regimes),
        ("table6 preset", table6),
        ("IS variance identity", variance_identity),
        ("zero-variance cases", zero_variance),
        ("naive and hypoexp oracles", oracle),
        ("RQMC convergence rate", rqmc_rate),
        ("byte-identical table2 output", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name}: {}", i + 1, outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
