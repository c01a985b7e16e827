//! CDF of `sum_i beta_i Z_i` for i.i.d. unit-mean exponentials `Z_i`.
//!
//! The sum is the absorption time of a pure-birth Markov chain that visits
//! states `1..N` in order and holds `Exp(mean beta_i)` time in state `i`. Its
//! sub-generator is the upper bidiagonal matrix `A` with `-1/beta_i` on the
//! diagonal and `+1/beta_i` on the superdiagonal, and
//!
//! ```text
//! P(sum beta_i Z_i <= t) = 1 - e_1' exp(t A) 1.
//! ```
//!
//! The right-hand side cancels catastrophically when the probability is tiny,
//! which is exactly the regime the importance-sampling estimators live in. We
//! therefore exponentiate the `(N+1) x (N+1)` generator that includes the
//! absorbing state and read the absorption probability off its first row
//! directly. The exponential itself is Padé(13) with scaling and squaring,
//! which does not care whether the rates repeat.

use crate::error::{domain, Error, Result};

/// Coefficients `beta_i` and a threshold `t` describing `P(sum beta_i Z_i <= t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoexpSpec {
    coeffs: Vec<f64>,
    threshold: f64,
}

impl HypoexpSpec {
    pub fn new(coeffs: Vec<f64>, threshold: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("hypoexponential spec needs at least one coefficient"));
        }
        if let Some(c) = coeffs.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(domain(format!(
                "hypoexponential coefficients must be positive, got {c}"
            )));
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(domain(format!(
                "hypoexponential threshold must be positive, got {threshold}"
            )));
        }
        Ok(Self { coeffs, threshold })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn generator(&self) -> BidiagonalGenerator {
        BidiagonalGenerator {
            rates: self.coeffs.iter().map(|b| 1.0 / b).collect(),
        }
    }
}

/// The upper bidiagonal sub-generator `A` with rates `1/beta_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalGenerator {
    rates: Vec<f64>,
}

impl BidiagonalGenerator {
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn dimension(&self) -> usize {
        self.rates.len()
    }

    /// Dense `N x N` matrix `A`.
    pub fn matrix(&self) -> Matrix {
        let n = self.dimension();
        let mut a = Matrix::zeros(n);
        for (i, &r) in self.rates.iter().enumerate() {
            a[(i, i)] = -r;
            if i + 1 < n {
                a[(i, i + 1)] = r;
            }
        }
        a
    }

    /// Dense `(N+1) x (N+1)` generator with the absorbing state appended.
    pub fn with_absorbing_state(&self) -> Matrix {
        let n = self.dimension();
        let mut q = Matrix::zeros(n + 1);
        for (i, &r) in self.rates.iter().enumerate() {
            q[(i, i)] = -r;
            q[(i, i + 1)] = r;
        }
        q
    }

    /// `e_1' exp(t A) 1`, the probability that absorption has not happened by `t`.
    pub fn row_product(&self, t: f64) -> Result<f64> {
        let e = expm(&self.with_absorbing_state().scaled(t))?;
        let n = self.dimension();
        Ok((0..n).map(|j| e[(0, j)]).sum::<f64>().clamp(0.0, 1.0))
    }

    /// `1 - e_1' exp(t A) 1`, evaluated as the absorption entry.
    pub fn absorption_probability(&self, t: f64) -> Result<f64> {
        let e = expm(&self.with_absorbing_state().scaled(t))?;
        Ok(e[(0, self.dimension())].clamp(0.0, 1.0))
    }
}

/// `P(sum_i beta_i Z_i <= threshold)`.
pub fn hypoexp_cdf(spec: &HypoexpSpec) -> Result<f64> {
    spec.generator().absorption_probability(spec.threshold)
}

/// `P(sum_i beta_i Z_i > threshold)`.
pub fn hypoexp_sf(spec: &HypoexpSpec) -> Result<f64> {
    spec.generator().row_product(spec.threshold)
}

/// Small dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn scaled(mut self, c: f64) -> Self {
        self.data.iter_mut().for_each(|x| *x *= c);
        self
    }

    fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `sum_k c_k M_k`.
    fn combination(terms: &[(f64, &Matrix)]) -> Matrix {
        let n = terms[0].1.n;
        let mut out = Matrix::zeros(n);
        for (c, m) in terms {
            for (o, x) in out.data.iter_mut().zip(&m.data) {
                *o += c * x;
            }
        }
        out
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap_or(col);
            if a[pivot * n + col] == 0.0 || !a[pivot * n + col].is_finite() {
                return Err(Error::Numerical(
                    "singular Padé denominator in matrix exponential".into(),
                ));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    b.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
                for j in 0..n {
                    b[i * n + j] -= f * b[col * n + j];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..n {
                let mut s = b[col * n + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * b[k * n + j];
                }
                b[col * n + j] = s / d;
            }
        }
        Ok(Matrix { n, data: b })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(x: &Matrix) -> Result<Matrix> {
    let n = x.dim();
    let norm = x.norm1();
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix exponential of a non-finite matrix".into()));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = x.clone().scaled(0.5f64.powi(squarings));
    let b = &PADE13;
    let id = Matrix::identity(n);
    let a2 = a.mul(&a);
    let a4 = a2.mul(&a2);
    let a6 = a4.mul(&a2);

    let u_inner = a6.mul(&Matrix::combination(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]));
    let u_inner = Matrix::combination(&[(1.0, &u_inner), (b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)]);
    let u = a.mul(&u_inner);
    let v_inner = a6.mul(&Matrix::combination(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]));
    let v = Matrix::combination(&[(1.0, &v_inner), (b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);
    let numer = Matrix::combination(&[(1.0, &v), (1.0, &u)]);
    let denom = Matrix::combination(&[(1.0, &v), (-1.0, &u)]);
    let mut r = denom.solve(&numer)?;
    for _ in 0..squarings {
        r = r.mul(&r);
    }
    if r.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "matrix exponential produced non-finite entries".into(),
        ));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma_cdf;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cdf(coeffs: &[f64], t: f64) -> f64 {
        hypoexp_cdf(&HypoexpSpec::new(coeffs.to_vec(), t).unwrap()).unwrap()
    }

    /// Partial-fraction CDF for pairwise distinct rates.
    fn distinct_rate_cdf(coeffs: &[f64], t: f64) -> f64 {
        let rates: Vec<f64> = coeffs.iter().map(|b| 1.0 / b).collect();
        let mut surv = 0.0;
        for (i, &ri) in rates.iter().enumerate() {
            let mut c = 1.0;
            for (j, &rj) in rates.iter().enumerate() {
                if i != j {
                    c *= rj / (rj - ri);
                }
            }
            surv += c * (-ri * t).exp();
        }
        1.0 - surv
    }

    #[test]
    fn generator_entry_pattern() {
        let g = HypoexpSpec::new(vec![0.5, 2.0, 4.0], 1.0).unwrap().generator();
        let a = g.matrix();
        let expected = [[-2.0, 2.0, 0.0], [0.0, -0.5, 0.5], [0.0, 0.0, -0.25]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], expected[i][j]);
            }
        }
    }

    #[test]
    fn single_exponential() {
        for &(b, t) in &[(1.0, 0.3), (0.2, 1.7), (5.0, 0.01)] {
            assert_abs_diff_eq!(cdf(&[b], t), 1.0 - (-t / b).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn equal_rates_give_erlang() {
        for &t in &[0.001, 0.5, 2.0, 8.0, 30.0] {
            let ours = cdf(&[1.0; 8], t);
            let erlang = gamma_cdf(t, 8.0, 1.0).unwrap();
            assert!(
                (ours - erlang).abs() <= 1e-12 * erlang.max(1e-3),
                "t={t}: {ours} vs {erlang}"
            );
        }
    }

    #[test]
    fn tiny_probabilities_keep_relative_accuracy() {
        let ours = cdf(&[1.0; 8], 1e-3);
        assert!((ours / 2.477_955_136_383_746_9e-29 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn distinct_rates_match_partial_fractions() {
        let got = cdf(&[1.0, 0.5, 1.0 / 3.0], 2.0);
        assert_abs_diff_eq!(got, distinct_rate_cdf(&[1.0, 0.5, 1.0 / 3.0], 2.0), epsilon = 1e-12);
        // 50-digit mpmath reference
        assert_abs_diff_eq!(got, 0.646_462_314_779_698_1, epsilon = 1e-13);
    }

    // 60-digit mpmath expm of the absorbing generator.
    #[test]
    fn tied_rates_reference_values() {
        let betas = [0.125, 1.0 / 7.0, 1.0 / 6.0, 0.2, 0.25, 0.25, 0.25, 0.25];
        let g1 = (0.1f64 + 4.0).ln() + (0.25f64).ln();
        let l1 = cdf(&betas, g1);
        assert!((l1 / 1.313_960_346_343_773_5e-12 - 1.0).abs() < 1e-9, "{l1}");
        let g1 = (1.5f64 + 4.0).ln() + (0.25f64).ln();
        assert!((cdf(&betas, g1) / 2.615_316_291_286_468_9e-4 - 1.0).abs() < 1e-11);
        let got = cdf(&[0.3, 0.3, 1.7, 0.05], 0.9);
        assert_abs_diff_eq!(got, 0.169_476_906_586_586_58, epsilon = 1e-13);
    }

    #[test]
    fn survival_complements_cdf() {
        let spec = HypoexpSpec::new(vec![0.3, 0.3, 1.7, 0.05], 0.9).unwrap();
        assert_abs_diff_eq!(
            hypoexp_cdf(&spec).unwrap() + hypoexp_sf(&spec).unwrap(),
            1.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn invalid_specs() {
        assert!(HypoexpSpec::new(vec![], 1.0).is_err());
        assert!(HypoexpSpec::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(HypoexpSpec::new(vec![1.0, -2.0], 1.0).is_err());
        assert!(HypoexpSpec::new(vec![1.0], 0.0).is_err());
        assert!(HypoexpSpec::new(vec![1.0], f64::NAN).is_err());
    }

    fn coeff_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.05f64..5.0, 1..10)
    }

    proptest! {
        #[test]
        fn limits_and_monotonicity(coeffs in coeff_vec()) {
            let lo = cdf(&coeffs, 1e-8);
            let hi = cdf(&coeffs, 1e8);
            prop_assert!((0.0..1e-6).contains(&lo));
            prop_assert!((hi - 1.0).abs() < 1e-12);
            let mut prev = 0.0;
            for k in -6..=6 {
                let p = cdf(&coeffs, 2f64.powi(k));
                prop_assert!(p + 1e-15 >= prev);
                prev = p;
            }
        }

        #[test]
        fn permutation_invariance(coeffs in coeff_vec(), t in 0.01f64..20.0, seed in any::<u64>()) {
            let mut shuffled = coeffs.clone();
            let len = shuffled.len();
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert!((cdf(&coeffs, t) - cdf(&shuffled, t)).abs() <= 1e-10);
        }

        #[test]
        fn tie_robustness(coeffs in coeff_vec(), t in 0.01f64..20.0, idx in any::<prop::sample::Index>()) {
            let mut tied = coeffs.clone();
            tied.push(coeffs[idx.index(coeffs.len())]);
            let mut perturbed = tied.clone();
            *perturbed.last_mut().unwrap() += 1e-13;
            prop_assert!((cdf(&tied, t) - cdf(&perturbed, t)).abs() <= 1e-9);
        }
    }
}
