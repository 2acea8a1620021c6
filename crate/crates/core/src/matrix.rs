//! Row-major sample matrices shared by the augmentation, generator and
//! estimation modules.

use std::fmt::Debug;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Tolerance on soft-label row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Scalar type of features. The mixing kernels compute in this type;
/// statistics and label arithmetic use `f64` regardless.
pub trait Element:
    Copy + Default + Debug + PartialEq + Add<Output = Self> + Mul<Output = Self> + Send + Sync + 'static
{
    const DTYPE: &'static str;

    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;

    /// `self * a + acc`, fused when the target has FMA.
    fn fmadd(self, a: Self, acc: Self) -> Self;

    /// Hook for a vectorized `out = w · x` over the leading
    /// `rows x cols` block; returns that block's extent actually covered.
    #[doc(hidden)]
    fn weighted_rows_simd(
        _w: &[Self],
        _n_out: usize,
        _x: &[Self],
        _n_in: usize,
        _d: usize,
        _out: &mut [Self],
    ) -> (usize, usize) {
        (0, 0)
    }
}

impl Element for f32 {
    const DTYPE: &'static str = "f32";

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn fmadd(self, a: Self, acc: Self) -> Self {
        if cfg!(target_feature = "fma") {
            self.mul_add(a, acc)
        } else {
            self * a + acc
        }
    }

    fn weighted_rows_simd(
        w: &[Self],
        n_out: usize,
        x: &[Self],
        n_in: usize,
        d: usize,
        out: &mut [Self],
    ) -> (usize, usize) {
        crate::mixer::simd::weighted_rows_f32(w, n_out, x, n_in, d, out)
    }
}

impl Element for f64 {
    const DTYPE: &'static str = "f64";

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn fmadd(self, a: Self, acc: Self) -> Self {
        if cfg!(target_feature = "fma") {
            self.mul_add(a, acc)
        } else {
            self * a + acc
        }
    }
}

/// `n x d` matrix of samples, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T: Element = f32> {
    n: usize,
    d: usize,
    data: Vec<T>,
}

impl<T: Element> FeatureMatrix<T> {
    pub fn new(n: usize, d: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "feature matrix needs at least one row and column, got {n}x{d}"
            )));
        }
        if data.len() != n * d {
            return Err(Error::invalid(format!(
                "feature matrix {n}x{d} needs {} values, got {}",
                n * d,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.to_f64().is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged feature rows"));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + Clone {
        self.data.chunks_exact(self.d)
    }

    /// Copies the selected rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            if i >= self.n {
                return Err(Error::invalid(format!("row {i} out of range 0..{}", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(idx.len(), self.d, data)
    }

    pub fn to_f64(&self) -> FeatureMatrix<f64> {
        FeatureMatrix {
            n: self.n,
            d: self.d,
            data: self.data.iter().map(|v| v.to_f64()).collect(),
        }
    }

    pub(crate) fn from_raw(n: usize, d: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), n * d);
        Self { n, d, data }
    }
}

/// Integer class labels in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLabels {
    labels: Vec<usize>,
    k: usize,
}

impl ClassLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::invalid(format!(
                "label {l} at position {i} is not below class count {k}"
            )));
        }
        Ok(Self { labels, k })
    }

    /// Class count inferred as `max(label) + 1`.
    pub fn infer(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

/// `n x k` matrix whose rows are probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl SoftLabelMatrix {
    pub fn new(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("soft labels need at least one class"));
        }
        if data.len() != n * k {
            return Err(Error::invalid(format!(
                "soft label matrix {n}x{k} needs {} values, got {}",
                n * k,
                data.len()
            )));
        }
        for (i, row) in data.chunks_exact(k).enumerate() {
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "soft label row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!("soft label row {i} sums to {s}")));
            }
        }
        Ok(Self { n, k, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.k);
        for &i in idx {
            if i >= self.n {
                return Err(Error::invalid(format!("row {i} out of range 0..{}", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self::from_raw(idx.len(), self.k, data))
    }

    pub(crate) fn from_raw(n: usize, k: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * k);
        Self { n, k, data }
    }
}
