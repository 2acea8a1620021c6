//! Weight generation for ζ-mixup.
//!
//! A synthetic sample mixes `N` originals with weights `w_i = s_i^-γ / C`,
//! where `s` is a uniformly random ordering of the ranks `1..=N` and
//! `C = Σ_{j=1}^{N} j^-γ` is the N-truncated zeta sum. Above [`GAMMA_MIN`]
//! the rank-1 sample always outweighs all the others combined.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Root of `ζ(γ) = 2`, rounded to five decimals. At or above this value the
/// largest weight exceeds the sum of the remaining ones for every `N`.
pub const GAMMA_MIN: f64 = 1.72865;

/// Tolerance on weight row sums.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Number of explicit terms used by [`zeta_tail_corrected`] in the root solve.
pub const ZETA_SOLVE_TERMS: usize = 1_000_000;

/// Bracket on which `ζ` is bisected; ζ is monotone decreasing there.
const SOLVE_BRACKET: (f64, f64) = (1.01, 3.0);

/// Sharpness hyperparameter γ.
///
/// Values built with [`Gamma::new`] are finite and non-negative.
/// [`Gamma::from_lambda`] may produce negative values; those are only
/// meaningful for reproducing pairwise mixup with `N = 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Gamma(f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaStatus {
    /// `γ >= GAMMA_MIN`: one weight dominates the rest.
    Dominant,
    /// Legal, but dominance is not guaranteed.
    BelowMin,
}

impl Gamma {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid(format!(
                "gamma must be finite and non-negative, got {value}"
            )));
        }
        Ok(Self(value))
    }

    /// `γ = log2(λ / (1 - λ))`, the exponent for which two-sample ζ-mixup
    /// with ordering `[1, 2]` assigns weights `[λ, 1 - λ]`.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        gamma_from_lambda(lambda)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn status(self) -> GammaStatus {
        if self.0 >= GAMMA_MIN {
            GammaStatus::Dominant
        } else {
            GammaStatus::BelowMin
        }
    }
}

/// `Σ_{j=1}^{n} j^-γ`.
pub fn truncated_zeta(gamma: f64, n: usize) -> Result<f64> {
    if !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be finite, got {gamma}")));
    }
    if n == 0 {
        return Err(Error::invalid("truncated zeta needs at least one term"));
    }
    // smallest terms first
    Ok((1..=n).rev().map(|j| (j as f64).powf(-gamma)).sum())
}

/// Riemann zeta for real `s > 1`: `terms` explicit summands plus the integral
/// tail `J^(1-s) / (s - 1)`.
pub fn zeta_tail_corrected(s: f64, terms: usize) -> Result<f64> {
    if !s.is_finite() || s <= 1.0 {
        return Err(Error::invalid(format!("zeta needs finite s > 1, got {s}")));
    }
    if terms == 0 {
        return Err(Error::invalid("zeta needs at least one explicit term"));
    }
    ZetaSeries::new(terms).eval(s)
}

/// Cached `ln j` table so repeated evaluations during the root solve cost one
/// `exp` per term.
struct ZetaSeries {
    ln_j: Vec<f64>,
}

impl ZetaSeries {
    fn new(terms: usize) -> Self {
        Self {
            ln_j: (1..=terms).map(|j| (j as f64).ln()).collect(),
        }
    }

    fn eval(&self, s: f64) -> Result<f64> {
        let j = self.ln_j.len() as f64;
        let tail = j.powf(1.0 - s) / (s - 1.0);
        let head: f64 = self.ln_j.iter().rev().map(|l| (-s * l).exp()).sum();
        Ok(head + tail)
    }
}

/// Solves `ζ(γ) = 2` by bisection and returns the midpoint of the final
/// bracket, which is narrower than `tolerance`.
pub fn solve_gamma_min(tolerance: f64) -> Result<f64> {
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let series = ZetaSeries::new(ZETA_SOLVE_TERMS);
    let (mut lo, mut hi) = SOLVE_BRACKET;
    let f_lo = series.eval(lo)? - 2.0;
    let f_hi = series.eval(hi)? - 2.0;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Numeric(format!(
            "zeta(s) - 2 does not change sign on [{lo}, {hi}]"
        )));
    }
    while hi - lo >= tolerance {
        let mid = 0.5 * (lo + hi);
        if series.eval(mid)? > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `γ = log2(λ / (1 - λ))` for `λ ∈ (0, 1)`.
pub fn gamma_from_lambda(lambda: f64) -> Result<Gamma> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    Ok(Gamma((lambda / (1.0 - lambda)).log2()))
}

/// A permutation of the ranks `1..=n`, stored as the rank vector `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering {
    ranks: Vec<usize>,
}

impl Ordering {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let n = ranks.len();
        if n == 0 {
            return Err(Error::invalid("ordering must be non-empty"));
        }
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r == 0 || r > n || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::invalid(format!(
                    "ranks {ranks:?} are not a permutation of 1..={n}"
                )));
            }
        }
        Ok(Self { ranks })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((1..=n).collect())
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// Draws an ordering uniformly from all `n!` permutations (Fisher–Yates).
pub fn sample_ordering<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Ordering> {
    if n == 0 {
        return Err(Error::invalid("ordering size must be positive"));
    }
    let mut ranks: Vec<usize> = (1..=n).collect();
    fisher_yates(&mut ranks, rng);
    Ok(Ordering { ranks })
}

pub(crate) fn fisher_yates<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Normalized weights for one synthetic sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// True when the largest weight exceeds the sum of all others.
    pub fn is_dominated(&self) -> bool {
        let (max, sum) = self
            .w
            .iter()
            .fold((0.0f64, 0.0f64), |(m, s), &v| (m.max(v), s + v));
        max > sum - max
    }
}

/// Unnormalized p-series terms `j^-γ` for `j = 1..=n` together with their
/// sum. Computed once and indexed by rank.
struct RankTerms {
    terms: Vec<f64>,
    norm: f64,
}

impl RankTerms {
    fn new(gamma: Gamma, n: usize) -> Result<Self> {
        let terms: Vec<f64> = (1..=n).map(|j| (j as f64).powf(-gamma.0)).collect();
        let norm = truncated_zeta(gamma.0, n)?;
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numeric(format!(
                "truncated zeta for gamma={} and n={n} is {norm}",
                gamma.0
            )));
        }
        Ok(Self { terms, norm })
    }

    fn weights_into(&self, ranks: &[usize], out: &mut [f64]) {
        for (o, &r) in out.iter_mut().zip(ranks) {
            *o = self.terms[r - 1] / self.norm;
        }
    }
}

/// `w_i = s_i^-γ / Σ_{j=1}^{N} j^-γ`.
pub fn zeta_weights(gamma: Gamma, ordering: &Ordering) -> Result<WeightVector> {
    let n = ordering.len();
    let terms = RankTerms::new(gamma, n)?;
    let mut w = vec![0.0; n];
    terms.weights_into(ordering.ranks(), &mut w);
    Ok(WeightVector { w })
}

/// Row-stochastic `n x n` matrix; row `p` produces synthetic sample `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n_out: usize,
    n_in: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    /// Validates that every row is non-negative and sums to one.
    pub fn new(n_out: usize, n_in: usize, data: Vec<f64>) -> Result<Self> {
        if n_out == 0 || n_in == 0 || data.len() != n_out * n_in {
            return Err(Error::invalid(format!(
                "weight matrix {n_out}x{n_in} with {} values",
                data.len()
            )));
        }
        for (p, row) in data.chunks_exact(n_in).enumerate() {
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!("weight row {p} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::invalid(format!("weight row {p} sums to {s}")));
            }
        }
        Ok(Self { n_out, n_in, data })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(n, n, data)
    }

    /// One row per weight vector; all vectors must have the same length.
    pub fn from_weight_vectors(rows: &[WeightVector]) -> Result<Self> {
        let n_in = rows.first().map_or(0, WeightVector::len);
        if rows.iter().any(|r| r.len() != n_in) {
            return Err(Error::invalid("weight vectors of different lengths"));
        }
        let data = rows.iter().flat_map(|r| r.w.iter().copied()).collect();
        Self::new(rows.len(), n_in, data)
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.n_in..(p + 1) * self.n_in]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_in)
    }

    pub(crate) fn from_raw(n_out: usize, n_in: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_out * n_in);
        Self { n_out, n_in, data }
    }
}

/// `n x n` ζ-mixup weights, each row from an independent random ordering.
pub fn weight_matrix<R: Rng + ?Sized>(n: usize, gamma: Gamma, rng: &mut R) -> Result<WeightMatrix> {
    if n == 0 {
        return Err(Error::invalid("weight matrix size must be positive"));
    }
    let terms = RankTerms::new(gamma, n)?;
    let mut data = vec![0.0; n * n];
    let mut ranks: Vec<usize> = (1..=n).collect();
    for row in data.chunks_exact_mut(n) {
        // reshuffling the previous permutation is still uniform
        fisher_yates(&mut ranks, rng);
        terms.weights_into(&ranks, row);
    }
    Ok(WeightMatrix::from_raw(n, n, data))
}
