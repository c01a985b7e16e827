//! Branch distributions and the problem description every estimator consumes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::special::{normal_cdf, normal_quantile, reg_lower_gamma, reg_upper_gamma};

/// A parametric branch distribution.
///
/// `ParetoLomax` is the unit-scale Lomax law with density `alpha (1+x)^-(1+alpha)`
/// on `x >= 0`. `GeneralizedGamma` has density
/// `p / a^d x^(d-1) exp(-(x/a)^p) / Gamma(d/p)`, so that `Weibull(alpha, eta)` is
/// `GeneralizedGamma(alpha, alpha, eta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    ParetoLomax { alpha: f64 },
    Weibull { alpha: f64, eta: f64 },
    GeneralizedGamma { d: f64, p: f64, a: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "parameter `{name}` must be positive and finite, got {v}"
        )))
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ParetoLomax { alpha } => positive("alpha", alpha),
            Self::Weibull { alpha, eta } => positive("alpha", alpha).and(positive("eta", eta)),
            Self::GeneralizedGamma { d, p, a } => positive("d", d).and(positive("p", p)).and(positive("a", a)),
            Self::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(domain(format!("parameter `mu` must be finite, got {mu}")));
                }
                positive("sigma", sigma)
            }
            Self::Exponential { mean } => positive("mean", mean),
            Self::Gamma { shape, scale } => positive("shape", shape).and(positive("scale", scale)),
        }
    }

    /// Family name as used in the text form.
    pub fn family(&self) -> &'static str {
        match self {
            Self::ParetoLomax { .. } => "pareto",
            Self::Weibull { .. } => "weibull",
            Self::GeneralizedGamma { .. } => "gengamma",
            Self::LogNormal { .. } => "lognormal",
            Self::Exponential { .. } => "exponential",
            Self::Gamma { .. } => "gamma",
        }
    }

    /// `(d, p, a)` when the law belongs to the generalized gamma family.
    pub fn as_generalized_gamma(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::Weibull { alpha, eta } => Some((alpha, alpha, eta)),
            Self::GeneralizedGamma { d, p, a } => Some((d, p, a)),
            Self::Exponential { mean } => Some((1.0, 1.0, mean)),
            Self::Gamma { shape, scale } => Some((shape, 1.0, scale)),
            Self::ParetoLomax { .. } | Self::LogNormal { .. } => None,
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if x.is_nan() {
            return Err(domain("cdf argument is NaN"));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            Self::ParetoLomax { alpha } => -(-alpha * x.ln_1p()).exp_m1(),
            Self::Weibull { alpha, eta } => -(-(x / eta).powf(alpha)).exp_m1(),
            Self::GeneralizedGamma { d, p, a } => reg_lower_gamma(d / p, (x / a).powf(p))?,
            Self::LogNormal { mu, sigma } => normal_cdf((x.ln() - mu) / sigma),
            Self::Exponential { mean } => -(-x / mean).exp_m1(),
            Self::Gamma { shape, scale } => reg_lower_gamma(shape, x / scale)?,
        })
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        Ok(match *self {
            Self::ParetoLomax { alpha } => (-(-u).ln_1p() / alpha).exp_m1(),
            Self::Weibull { alpha, eta } => eta * (-(-u).ln_1p()).powf(1.0 / alpha),
            Self::GeneralizedGamma { d, p, a } => a * standard_gamma_quantile(d / p, u)?.powf(1.0 / p),
            Self::LogNormal { mu, sigma } => (mu + sigma * normal_quantile(u)).exp(),
            Self::Exponential { mean } => -mean * (-u).ln_1p(),
            Self::Gamma { shape, scale } => scale * standard_gamma_quantile(shape, u)?,
        })
    }

    /// Draws one value. Assumes the spec has been validated.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::ParetoLomax { alpha } => {
                let u: f64 = rng.random();
                // 1 - u lies in (0, 1]
                (-(1.0 - u).ln() / alpha).exp_m1()
            }
            Self::Weibull { alpha, eta } => {
                let e: f64 = Exp1.sample(rng);
                eta * e.powf(1.0 / alpha)
            }
            Self::GeneralizedGamma { d, p, a } => a * sample_standard_gamma(rng, d / p).powf(1.0 / p),
            Self::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Self::Exponential { mean } => {
                let e: f64 = Exp1.sample(rng);
                mean * e
            }
            Self::Gamma { shape, scale } => scale * sample_standard_gamma(rng, shape),
        }
    }

    /// The monotone map sending this law to the unit-mean exponential.
    pub fn to_exponential_transform(&self) -> Result<ExponentialTransform> {
        self.validate()?;
        match *self {
            Self::ParetoLomax { alpha } => Ok(ExponentialTransform::Pareto { alpha }),
            Self::Weibull { alpha, eta } => Ok(ExponentialTransform::Weibull { alpha, eta }),
            _ => Err(Error::UnsupportedFamily {
                family: self.family(),
                operation: "the exponential transform",
            }),
        }
    }
}

fn sample_standard_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    rand_distr::Gamma::new(shape, 1.0)
        .expect("validated gamma shape")
        .sample(rng)
}

/// Quantile of Gamma(shape, 1) by safeguarded Newton iteration on `log x`.
fn standard_gamma_quantile(shape: f64, u: f64) -> Result<f64> {
    let upper = u > 0.5;
    // Residual in whichever tail keeps full relative precision.
    let residual = |x: f64| -> Result<f64> {
        if upper {
            Ok((1.0 - u) - reg_upper_gamma(shape, x)?)
        } else {
            Ok(reg_lower_gamma(shape, x)? - u)
        }
    };
    let ln_gamma_shape = statrs::function::gamma::ln_gamma(shape);
    // d/dy P(shape, e^y) = x * pdf(x)
    let slope = |y: f64| (shape * y - y.exp() - ln_gamma_shape).exp();

    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    while residual(lo.exp())? > 0.0 {
        lo -= 2.0;
        if lo < -745.0 {
            return Ok(0.0);
        }
    }
    while residual(hi.exp())? < 0.0 {
        hi += 1.0;
        if hi > 709.0 {
            return Err(Error::Numerical(format!("gamma quantile bracket overflow at u={u}")));
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..300 {
        let r = residual(y.exp())?;
        if r == 0.0 {
            return Ok(y.exp());
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let s = slope(y);
        let mut next = y - r / s;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * next.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            return Ok(next.exp());
        }
        y = next;
    }
    Err(Error::Numerical(format!(
        "gamma quantile did not converge at shape={shape}, u={u}"
    )))
}

/// Monotone map `x -> y` with `Y` unit-mean exponential, and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentialTransform {
    /// `y = alpha log(1 + x)`
    Pareto { alpha: f64 },
    /// `y = (x / eta)^alpha`
    Weibull { alpha: f64, eta: f64 },
}

impl ExponentialTransform {
    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { alpha } => alpha * x.ln_1p(),
            Self::Weibull { alpha, eta } => (x / eta).powf(alpha),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Self::Pareto { alpha } => (y / alpha).exp_m1(),
            Self::Weibull { alpha, eta } => eta * y.powf(1.0 / alpha),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ParetoLomax { alpha } => write!(f, "pareto(alpha={alpha})"),
            Self::Weibull { alpha, eta } => write!(f, "weibull(alpha={alpha},eta={eta})"),
            Self::GeneralizedGamma { d, p, a } => write!(f, "gengamma(d={d},p={p},a={a})"),
            Self::LogNormal { mu, sigma } => write!(f, "lognormal(mu={mu},sigma={sigma})"),
            Self::Exponential { mean } => write!(f, "exponential(mean={mean})"),
            Self::Gamma { shape, scale } => write!(f, "gamma(shape={shape},scale={scale})"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `family(key=value,...)`. Keys may come in any order; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || {
            domain(format!(
                "malformed distribution `{s}`, expected e.g. `weibull(alpha=0.5,eta=1)`"
            ))
        };
        let (name, rest) = compact.split_once('(').ok_or_else(bad)?;
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        let mut params: Vec<(&str, f64)> = Vec::new();
        if !body.is_empty() {
            for kv in body.split(',') {
                let (k, v) = kv.split_once('=').ok_or_else(bad)?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| domain(format!("parameter `{k}` of `{s}` is not a number: `{v}`")))?;
                if params.iter().any(|(seen, _)| *seen == k) {
                    return Err(domain(format!("parameter `{k}` repeated in `{s}`")));
                }
                params.push((k, v));
            }
        }
        let family = name.to_ascii_lowercase();
        let keys: &[&str] = match family.as_str() {
            "pareto" | "lomax" => &["alpha"],
            "weibull" => &["alpha", "eta"],
            "gengamma" => &["d", "p", "a"],
            "lognormal" => &["mu", "sigma"],
            "exponential" => &["mean"],
            "gamma" => &["shape", "scale"],
            _ => return Err(domain(format!("unknown distribution family `{name}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !keys.contains(k)) {
            return Err(domain(format!("unknown parameter `{k}` for `{family}`")));
        }
        let get = |key: &str| {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| domain(format!("missing parameter `{key}` in `{s}`")))
        };
        let spec = match family.as_str() {
            "pareto" | "lomax" => Self::ParetoLomax { alpha: get("alpha")? },
            "weibull" => Self::Weibull {
                alpha: get("alpha")?,
                eta: get("eta")?,
            },
            "gengamma" => Self::GeneralizedGamma {
                d: get("d")?,
                p: get("p")?,
                a: get("a")?,
            },
            "lognormal" => Self::LogNormal {
                mu: get("mu")?,
                sigma: get("sigma")?,
            },
            "exponential" => Self::Exponential { mean: get("mean")? },
            _ => Self::Gamma {
                shape: get("shape")?,
                scale: get("scale")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Branch laws: one shared law, or one law per branch.
#[derive(Debug, Clone, PartialEq)]
pub enum Branches {
    Iid(DistributionSpec),
    Independent(Vec<DistributionSpec>),
}

/// `P(X(1) + ... + X(L) <= threshold)` for `N` independent branches.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatSumProblem {
    n_branches: usize,
    n_combined: usize,
    threshold: f64,
    branches: Branches,
}

impl OrderStatSumProblem {
    pub fn new(n_branches: usize, n_combined: usize, threshold: f64, dist: DistributionSpec) -> Result<Self> {
        Self::with_branches(n_branches, n_combined, threshold, Branches::Iid(dist))
    }

    pub fn independent(n_combined: usize, threshold: f64, dists: Vec<DistributionSpec>) -> Result<Self> {
        Self::with_branches(dists.len(), n_combined, threshold, Branches::Independent(dists))
    }

    fn with_branches(n_branches: usize, n_combined: usize, threshold: f64, branches: Branches) -> Result<Self> {
        if n_branches == 0 {
            return Err(domain("the number of branches N must be at least 1"));
        }
        if n_combined == 0 || n_combined > n_branches {
            return Err(domain(format!(
                "the number of combined branches L must satisfy 1 <= L <= N = {n_branches}, got {n_combined}"
            )));
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(domain(format!(
                "threshold must be positive and finite, got {threshold}"
            )));
        }
        match &branches {
            Branches::Iid(d) => d.validate()?,
            Branches::Independent(ds) => {
                if ds.len() != n_branches {
                    return Err(domain(format!("expected {n_branches} branch laws, got {}", ds.len())));
                }
                ds.iter().try_for_each(DistributionSpec::validate)?;
            }
        }
        Ok(Self {
            n_branches,
            n_combined,
            threshold,
            branches,
        })
    }

    pub fn n_branches(&self) -> usize {
        self.n_branches
    }

    pub fn n_combined(&self) -> usize {
        self.n_combined
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn branches(&self) -> &Branches {
        &self.branches
    }

    /// The shared law, if the branches are i.i.d.
    pub fn iid(&self) -> Option<&DistributionSpec> {
        match &self.branches {
            Branches::Iid(d) => Some(d),
            Branches::Independent(_) => None,
        }
    }

    pub fn branch(&self, i: usize) -> &DistributionSpec {
        match &self.branches {
            Branches::Iid(d) => d,
            Branches::Independent(ds) => &ds[i],
        }
    }

    /// Same problem at another threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        Self::with_branches(self.n_branches, self.n_combined, threshold, self.branches.clone())
    }

    pub(crate) fn family_label(&self) -> &'static str {
        match &self.branches {
            Branches::Iid(d) => d.family(),
            Branches::Independent(_) => "independent",
        }
    }
}
