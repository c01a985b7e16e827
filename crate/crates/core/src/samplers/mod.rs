//! Random sampling primitives used by the estimators.

mod rng;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};

pub(crate) use rng::splitmix64;
pub use rng::RngStream;

/// Consecutive rejections after which acceptance-rejection gives up.
pub const AR_ITERATION_CAP: u64 = 1_000_000;

/// A point on the unit simplex (closed `sum = 1`, or the sub-simplex `sum <= 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(pub Vec<f64>);

impl SimplexPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Largest `l` order statistics of `N` i.i.d. unit exponentials from `N`
/// i.i.d. unit exponentials `z`, via the Rényi spacings
/// `Y(k) = sum_{j=1}^{N-k+1} z_j / (N-j+1)`.
///
/// Output is descending: `Y(1) >= ... >= Y(l)`.
pub fn exp_order_stats_from_spacings(z: &[f64], l: usize) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(domain("spacings need at least one exponential draw"));
    }
    if l == 0 || l > z.len() {
        return Err(domain(format!("need 1 <= L <= N = {}, got L = {l}", z.len())));
    }
    if let Some(v) = z.iter().find(|v| !(**v >= 0.0)) {
        return Err(domain(format!("spacings need nonnegative draws, got {v}")));
    }
    let mut out = vec![0.0; l];
    spacings_into(z, &mut out);
    Ok(out)
}

/// Unchecked core of [`exp_order_stats_from_spacings`]; fills `out.len()` statistics.
pub(crate) fn spacings_into(z: &[f64], out: &mut [f64]) {
    let n = z.len();
    let l = out.len();
    // partial = sum_{j <= m} z_j / (N - j + 1); Y(k) is the partial sum at m = N - k + 1.
    let mut partial = 0.0;
    for (j, &zj) in z.iter().enumerate() {
        partial += zj / (n - j) as f64;
        let m = j + 1;
        let k = n + 1 - m;
        if k <= l {
            out[k - 1] = partial;
        }
    }
}

/// Uniform point on `{u_i >= 0, sum u_i <= 1}` in `n` dimensions: the first `n`
/// spacings of `n` sorted uniforms.
pub fn uniform_subsimplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SimplexPoint {
    let mut out = vec![0.0; n];
    fill_subsimplex(rng, &mut out);
    SimplexPoint(out)
}

pub(crate) fn fill_subsimplex<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.random::<f64>();
    }
    out.sort_unstable_by(f64::total_cmp);
    let mut prev = 0.0;
    for v in out.iter_mut() {
        let cut = *v;
        *v = cut - prev;
        prev = cut;
    }
}

/// Order statistics drawn conditionally on `sum beta_i Z_i <= gamma1`, with the
/// number of acceptance-rejection proposals it took.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDraw {
    pub order_stats: Vec<f64>,
    pub proposals: u64,
}

/// Acceptance-rejection sampler for i.i.d. unit exponentials `Z` conditioned on
/// `sum_i beta_i Z_i <= gamma1`.
///
/// With `T_i = beta_i Z_i / gamma1` the conditional law of `T` on the
/// sub-simplex has density proportional to `exp(-gamma1 sum T_i / beta_i)`, so a
/// uniform sub-simplex proposal is accepted with exactly that probability.
#[derive(Debug, Clone)]
pub struct TruncatedExpSampler {
    /// `gamma1 / beta_i`
    scaled_rates: Vec<f64>,
    n_combined: usize,
}

impl TruncatedExpSampler {
    pub fn new(coeffs: &[f64], gamma1: f64, n_combined: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("truncated sampler needs at least one coefficient"));
        }
        if let Some(c) = coeffs.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(domain(format!("coefficients must be positive, got {c}")));
        }
        if !(gamma1 > 0.0) || !gamma1.is_finite() {
            return Err(domain(format!("truncation level must be positive, got {gamma1}")));
        }
        if n_combined == 0 || n_combined > coeffs.len() {
            return Err(domain(format!(
                "need 1 <= L <= N = {}, got L = {n_combined}",
                coeffs.len()
            )));
        }
        Ok(Self {
            scaled_rates: coeffs.iter().map(|b| gamma1 / b).collect(),
            n_combined,
        })
    }

    pub fn dimension(&self) -> usize {
        self.scaled_rates.len()
    }

    /// Draws into `out` (length `L`) using `z` (length `N`) as scratch; returns the
    /// number of proposals consumed. On return `z` holds the accepted exponentials.
    pub(crate) fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) -> Result<u64> {
        let mut proposals = 0u64;
        loop {
            proposals += 1;
            fill_subsimplex(rng, z);
            let exponent: f64 = z.iter().zip(&self.scaled_rates).map(|(t, r)| t * r).sum();
            let u: f64 = rng.random();
            if u <= (-exponent).exp() {
                for (t, r) in z.iter_mut().zip(&self.scaled_rates) {
                    *t *= r;
                }
                spacings_into(z, out);
                return Ok(proposals);
            }
            if proposals >= AR_ITERATION_CAP {
                return Err(Error::IterationCap(proposals));
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TruncatedDraw> {
        let mut z = vec![0.0; self.dimension()];
        let mut out = vec![0.0; self.n_combined];
        let proposals = self.draw_into(rng, &mut z, &mut out)?;
        Ok(TruncatedDraw {
            order_stats: out,
            proposals,
        })
    }
}

/// One draw of the `L` largest exponential order statistics restricted to
/// `sum beta_i Z_i <= gamma1`.
pub fn truncated_exp_order_stats<R: Rng + ?Sized>(
    rng: &mut R,
    coeffs: &[f64],
    gamma1: f64,
    l: usize,
) -> Result<TruncatedDraw> {
    TruncatedExpSampler::new(coeffs, gamma1, l)?.draw(rng)
}

/// Direction uniform on the unit sphere restricted to the negative orthant.
pub fn negative_orthant_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    fill_negative_orthant(rng, &mut out);
    out
}

pub(crate) fn fill_negative_orthant<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = -1.0;
        return;
    }
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            let y: f64 = StandardNormal.sample(rng);
            *v = y.abs();
            norm2 += y * y;
        }
        if norm2 > 0.0 && out.iter().all(|v| *v > 0.0) {
            let inv = 1.0 / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= -inv);
            return;
        }
    }
}

/// Dirichlet draw by normalizing independent Gamma(params_i, 1) variates.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, params: &[f64]) -> Result<SimplexPoint> {
    let gammas = params
        .iter()
        .map(|&a| {
            rand_distr::Gamma::new(a, 1.0)
                .map_err(|_| domain(format!("Dirichlet parameters must be positive, got {a}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if gammas.is_empty() {
        return Err(domain("Dirichlet needs at least one parameter"));
    }
    let mut out = vec![0.0; params.len()];
    fill_dirichlet(rng, &gammas, &mut out)?;
    Ok(SimplexPoint(out))
}

pub(crate) fn fill_dirichlet<R: Rng + ?Sized>(
    rng: &mut R,
    gammas: &[rand_distr::Gamma<f64>],
    out: &mut [f64],
) -> Result<()> {
    for _ in 0..1000 {
        let mut total = 0.0;
        for (v, g) in out.iter_mut().zip(gammas) {
            *v = g.sample(rng);
            total += *v;
        }
        if total > 0.0 && total.is_finite() {
            out.iter_mut().for_each(|v| *v /= total);
            return Ok(());
        }
    }
    Err(Error::Numerical("Dirichlet gamma draws underflowed repeatedly".into()))
}
