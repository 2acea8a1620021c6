//! Local intrinsic dimension by PCA on k-nearest-neighbor patches.
//!
//! For each point the patch is the point itself plus its `k` nearest
//! neighbors. The patch is centered and the local dimension is the number
//! of covariance eigenvalues above `eigen_threshold` times the largest one
//! (Fukunaga–Olsen, 5% by default).

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Element, FeatureMatrix};

pub const DEFAULT_EIGEN_THRESHOLD: f64 = 0.05;

/// `n x k` neighbor indices, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<usize>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }
}

#[inline]
fn sq_dist<T: Element>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&u, &v)| {
            let t = u.to_f64() - v.to_f64();
            t * t
        })
        .sum()
}

/// Exact Euclidean k-nearest neighbors, excluding the query itself. Ties in
/// distance go to the lower index.
pub fn knn<T: Element>(points: &FeatureMatrix<T>, k: usize) -> Result<NeighborTable> {
    let n = points.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k must satisfy 1 <= k < n, got k={k} for n={n}"
        )));
    }
    let mut indices = vec![0usize; n * k];
    indices
        .par_chunks_mut(k)
        .enumerate()
        .for_each_init(
            || Vec::with_capacity(n),
            |cand: &mut Vec<(f64, usize)>, (i, out)| {
                cand.clear();
                let q = points.row(i);
                cand.extend(
                    (0..n)
                        .filter(|&j| j != i)
                        .map(|j| (sq_dist(q, points.row(j)), j)),
                );
                let cmp = |a: &(f64, usize), b: &(f64, usize)| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                };
                cand.select_nth_unstable_by(k - 1, cmp);
                let head = &mut cand[..k];
                head.sort_unstable_by(cmp);
                for (o, &(_, j)) in out.iter_mut().zip(head.iter()) {
                    *o = j;
                }
            },
        );
    Ok(NeighborTable { k, indices })
}

/// Outcome of PCA on one patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalId {
    Dim(usize),
    /// Every point in the patch coincides; no direction carries variance.
    Degenerate,
}

impl LocalId {
    pub fn value(self) -> usize {
        match self {
            LocalId::Dim(d) => d,
            LocalId::Degenerate => 0,
        }
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!(
            "eigen threshold must lie in (0, 1), got {t}"
        )));
    }
    Ok(())
}

/// Local dimension of a single patch.
pub fn local_pca_id<T: Element>(neighborhood: &FeatureMatrix<T>, eigen_threshold: f64) -> Result<LocalId> {
    check_threshold(eigen_threshold)?;
    if neighborhood.n() < 2 {
        return Err(Error::invalid("a neighborhood needs at least two points"));
    }
    Ok(patch_id(neighborhood.rows(), neighborhood.n(), neighborhood.d(), eigen_threshold))
}

/// Covariance eigenvalues of the patch, in no particular order. When the
/// patch has fewer points than dimensions the Gram matrix `Xc·Xcᵀ` is used
/// instead of `Xcᵀ·Xc`; both share their non-zero spectrum.
fn patch_eigenvalues(centered: &DMatrix<f64>) -> Vec<f64> {
    let (m, d) = centered.shape();
    let scale = 1.0 / (m as f64 - 1.0);
    let small = if m < d {
        centered * centered.transpose()
    } else {
        centered.transpose() * centered
    };
    SymmetricEigen::new(small * scale).eigenvalues.iter().copied().collect()
}

fn patch_id<'a, T: Element>(
    rows: impl Iterator<Item = &'a [T]> + Clone,
    m: usize,
    d: usize,
    eigen_threshold: f64,
) -> LocalId {
    let mut first: Option<&[T]> = None;
    let mut identical = true;
    let mut mean = vec![0.0; d];
    for r in rows.clone() {
        match first {
            None => first = Some(r),
            Some(f) => identical &= f == r,
        }
        for (acc, &v) in mean.iter_mut().zip(r) {
            *acc += v.to_f64();
        }
    }
    if identical {
        return LocalId::Degenerate;
    }
    for v in &mut mean {
        *v /= m as f64;
    }
    let centered = DMatrix::from_row_iterator(
        m,
        d,
        rows.flat_map(|r| r.iter().zip(&mean).map(|(&v, &mu)| v.to_f64() - mu)),
    );
    let eig = patch_eigenvalues(&centered);
    let largest = eig.iter().copied().fold(0.0f64, f64::max);
    if !(largest > 0.0) {
        return LocalId::Degenerate;
    }
    let cut = eigen_threshold * largest;
    LocalId::Dim(eig.iter().filter(|&&l| l > cut).count())
}

/// Per-point local dimensions with aggregates over the non-degenerate points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdSummary {
    pub k: usize,
    pub threshold: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n_degenerate: usize,
    /// Local dimension per point; 0 marks a degenerate patch.
    pub per_point: Vec<usize>,
}

impl IdSummary {
    pub fn from_per_point(k: usize, threshold: f64, per_point: Vec<usize>) -> Result<Self> {
        let valid: Vec<f64> = per_point.iter().filter(|&&v| v > 0).map(|&v| v as f64).collect();
        if valid.is_empty() {
            return Err(Error::Numeric("every neighborhood is degenerate".into()));
        }
        let cnt = valid.len() as f64;
        let mean = valid.iter().sum::<f64>() / cnt;
        let std = (valid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / cnt).sqrt();
        Ok(Self {
            k,
            threshold,
            mean,
            std,
            n_degenerate: per_point.len() - valid.len(),
            per_point,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Local dimension of every point of a dataset.
pub fn dataset_local_id<T: Element>(
    points: &FeatureMatrix<T>,
    k: usize,
    eigen_threshold: f64,
) -> Result<IdSummary> {
    check_threshold(eigen_threshold)?;
    let table = knn(points, k)?;
    let d = points.d();
    let per_point: Vec<usize> = (0..points.n())
        .into_par_iter()
        .map(|i| {
            let patch = std::iter::once(i)
                .chain(table.neighbors(i).iter().copied())
                .map(|j| points.row(j));
            patch_id(patch, k + 1, d, eigen_threshold).value()
        })
        .collect();
    IdSummary::from_per_point(k, eigen_threshold, per_point)
}
