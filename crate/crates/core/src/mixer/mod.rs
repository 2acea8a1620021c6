//! Batch augmentation.
//!
//! ζ-mixup produces every synthetic sample of a batch from one matrix
//! product `W·X` (and `W·Y` for labels), with `W` from
//! [`weight_matrix`](crate::zeta::weight_matrix). Classic mixup draws one
//! `λ ~ Beta(α, α)` per batch and pairs each row with a partner taken from a
//! uniform shuffle of the batch.

mod kernel;
pub(crate) mod simd;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::matrix::{ClassLabels, Element, FeatureMatrix, SoftLabelMatrix, ROW_SUM_TOL};
use crate::zeta::{fisher_yates, weight_matrix, Gamma, WeightMatrix};

/// Default Beta concentration for the mixup baseline (uniform λ).
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Synthetic batch together with the weights that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBatch<T: Element = f32> {
    pub features: FeatureMatrix<T>,
    pub soft_labels: SoftLabelMatrix,
    pub weights_used: WeightMatrix,
}

pub fn one_hot(labels: &ClassLabels) -> SoftLabelMatrix {
    let k = labels.k();
    let mut data = vec![0.0; labels.len() * k];
    for (row, &l) in data.chunks_exact_mut(k).zip(labels.as_slice()) {
        row[l] = 1.0;
    }
    SoftLabelMatrix::from_raw(labels.len(), k, data)
}

/// `(λ·x_i + (1-λ)·x_j, λ·y_i + (1-λ)·y_j)`.
pub fn mixup_pair(
    x_i: &[f64],
    x_j: &[f64],
    y_i: &[f64],
    y_j: &[f64],
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if x_i.len() != x_j.len() || y_i.len() != y_j.len() {
        return Err(Error::invalid("mixup pair dimensions differ"));
    }
    let mu = 1.0 - lambda;
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(&u, &v)| lambda * u + mu * v).collect()
    };
    Ok((mix(x_i, x_j), mix(y_i, y_j)))
}

/// The random choices of one mixup batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MixupPlan {
    pub lambda: f64,
    /// `partners[p]` is the row mixed into output row `p`.
    pub partners: Vec<usize>,
}

impl MixupPlan {
    pub fn sample<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("mixup needs at least 2 samples, got {n}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        let beta = Beta::new(alpha, alpha).map_err(|e| Error::invalid(e.to_string()))?;
        let lambda = beta.sample(rng);
        let mut partners: Vec<usize> = (0..n).collect();
        fisher_yates(&mut partners, rng);
        Ok(Self { lambda, partners })
    }

    /// The equivalent 2-sparse row-stochastic matrix.
    pub fn weight_matrix(&self) -> WeightMatrix {
        let n = self.partners.len();
        let mut data = vec![0.0; n * n];
        for (p, &j) in self.partners.iter().enumerate() {
            data[p * n + p] += self.lambda;
            data[p * n + j] += 1.0 - self.lambda;
        }
        WeightMatrix::from_raw(n, n, data)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.partners.len() != n || self.partners.iter().any(|&j| j >= n) {
            return Err(Error::invalid("mixup plan does not match batch size"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

fn check_batch<T: Element>(features: &FeatureMatrix<T>, soft_labels: &SoftLabelMatrix) -> Result<()> {
    if features.n() != soft_labels.n() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} label rows",
            features.n(),
            soft_labels.n()
        )));
    }
    Ok(())
}

fn check_outputs<T>(n: usize, d: usize, k: usize, out_x: &[T], out_y: &[f64]) -> Result<()> {
    if out_x.len() != n * d || out_y.len() != n * k {
        return Err(Error::invalid("output buffers do not match the batch shape"));
    }
    Ok(())
}

fn finish<T: Element>(
    n: usize,
    d: usize,
    k: usize,
    x: Vec<T>,
    y: Vec<f64>,
    weights_used: WeightMatrix,
) -> Result<AugmentedBatch<T>> {
    let soft_labels =
        SoftLabelMatrix::new(n, k, y).map_err(|e| Error::Numeric(format!("mixed labels: {e}")))?;
    Ok(AugmentedBatch {
        features: FeatureMatrix::from_raw(n, d, x),
        soft_labels,
        weights_used,
    })
}

/// Classic mixup over a batch.
pub fn mixup_batch<T: Element, R: Rng + ?Sized>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    alpha: f64,
    rng: &mut R,
) -> Result<AugmentedBatch<T>> {
    check_batch(features, soft_labels)?;
    let plan = MixupPlan::sample(features.n(), alpha, rng)?;
    mixup_with_plan(features, soft_labels, &plan)
}

/// Classic mixup with the random choices fixed by the caller.
pub fn mixup_with_plan<T: Element>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    plan: &MixupPlan,
) -> Result<AugmentedBatch<T>> {
    check_batch(features, soft_labels)?;
    let (n, d, k) = (features.n(), features.d(), soft_labels.k());
    let mut x = vec![T::default(); n * d];
    let mut y = vec![0.0; n * k];
    mixup_with_plan_into(features, soft_labels, plan, &mut x, &mut y)?;
    finish(n, d, k, x, y, plan.weight_matrix())
}

/// Allocation-free mixup into caller-provided `n x d` and `n x k` buffers.
pub fn mixup_into<T: Element, R: Rng + ?Sized>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    alpha: f64,
    rng: &mut R,
    out_features: &mut [T],
    out_labels: &mut [f64],
) -> Result<MixupPlan> {
    check_batch(features, soft_labels)?;
    let plan = MixupPlan::sample(features.n(), alpha, rng)?;
    mixup_with_plan_into(features, soft_labels, &plan, out_features, out_labels)?;
    Ok(plan)
}

fn mixup_with_plan_into<T: Element>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    plan: &MixupPlan,
    out_features: &mut [T],
    out_labels: &mut [f64],
) -> Result<()> {
    let (n, d, k) = (features.n(), features.d(), soft_labels.k());
    plan.check(n)?;
    check_outputs(n, d, k, out_features, out_labels)?;
    kernel::pair_rows_into(features.as_slice(), d, &plan.partners, plan.lambda, out_features);
    kernel::pair_rows_into(soft_labels.as_slice(), k, &plan.partners, plan.lambda, out_labels);
    Ok(())
}

/// ζ-mixup over a batch: one synthetic sample per row of a fresh weight
/// matrix.
pub fn zeta_mixup_batch<T: Element, R: Rng + ?Sized>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    gamma: Gamma,
    rng: &mut R,
) -> Result<AugmentedBatch<T>> {
    check_batch(features, soft_labels)?;
    let weights = weight_matrix(features.n(), gamma, rng)?;
    apply_weights(features, soft_labels, weights)
}

/// Mixes a batch with a fixed row-stochastic weight matrix: features `W·X`,
/// labels `W·Y`.
pub fn apply_weights<T: Element>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    weights: WeightMatrix,
) -> Result<AugmentedBatch<T>> {
    check_batch(features, soft_labels)?;
    if weights.n_in() != features.n() {
        return Err(Error::invalid(format!(
            "weight matrix has {} columns for a batch of {}",
            weights.n_in(),
            features.n()
        )));
    }
    let (m, d, k) = (weights.n_out(), features.d(), soft_labels.k());
    let mut x = vec![T::default(); m * d];
    let mut y = vec![0.0; m * k];
    apply_weights_into(features, soft_labels, &weights, &mut x, &mut y)?;
    finish(m, d, k, x, y, weights)
}

/// Allocation-free ζ-mixup into caller-provided buffers.
pub fn zeta_mixup_into<T: Element, R: Rng + ?Sized>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    gamma: Gamma,
    rng: &mut R,
    out_features: &mut [T],
    out_labels: &mut [f64],
) -> Result<WeightMatrix> {
    check_batch(features, soft_labels)?;
    let weights = weight_matrix(features.n(), gamma, rng)?;
    apply_weights_into(features, soft_labels, &weights, out_features, out_labels)?;
    Ok(weights)
}

fn apply_weights_into<T: Element>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    weights: &WeightMatrix,
    out_features: &mut [T],
    out_labels: &mut [f64],
) -> Result<()> {
    let (n, d, k) = (features.n(), features.d(), soft_labels.k());
    let m = weights.n_out();
    check_outputs(m, d, k, out_features, out_labels)?;
    kernel::weighted_rows_into(weights.as_slice(), m, features.as_slice(), n, d, out_features);
    kernel::weighted_rows_into(weights.as_slice(), m, soft_labels.as_slice(), n, k, out_labels);
    Ok(())
}

/// Which augmentation to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixMethod {
    Zeta(Gamma),
    Mixup { alpha: f64 },
}

/// Result of augmenting a dataset chunk by chunk. Output row `i` was
/// synthesized from the chunk holding input row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkedAugmentation<T: Element = f32> {
    pub features: FeatureMatrix<T>,
    pub soft_labels: SoftLabelMatrix,
    pub batch_size: usize,
    /// One weight matrix per chunk, in order.
    pub weights: Vec<WeightMatrix>,
}

/// Splits the rows into consecutive batches of `batch_size` and augments
/// each one independently, as a training loop over mini-batches would.
/// Batches are drawn from `rng` in order.
pub fn augment_in_batches<T: Element, R: Rng + ?Sized>(
    features: &FeatureMatrix<T>,
    soft_labels: &SoftLabelMatrix,
    batch_size: usize,
    method: MixMethod,
    rng: &mut R,
) -> Result<ChunkedAugmentation<T>> {
    check_batch(features, soft_labels)?;
    let n = features.n();
    if batch_size < 2 || n % batch_size != 0 {
        return Err(Error::invalid(format!(
            "batch size must be at least 2 and divide the {n} rows, got {batch_size}"
        )));
    }
    let (d, k) = (features.d(), soft_labels.k());
    let mut x = vec![T::default(); n * d];
    let mut y = vec![0.0; n * k];
    let mut weights = Vec::with_capacity(n / batch_size);
    for start in (0..n).step_by(batch_size) {
        let idx: Vec<usize> = (start..start + batch_size).collect();
        let bx = features.select_rows(&idx)?;
        let by = soft_labels.select_rows(&idx)?;
        let ox = &mut x[start * d..(start + batch_size) * d];
        let oy = &mut y[start * k..(start + batch_size) * k];
        let w = match method {
            MixMethod::Zeta(g) => zeta_mixup_into(&bx, &by, g, rng, ox, oy)?,
            MixMethod::Mixup { alpha } => mixup_into(&bx, &by, alpha, rng, ox, oy)?.weight_matrix(),
        };
        weights.push(w);
    }
    let soft_labels =
        SoftLabelMatrix::new(n, k, y).map_err(|e| Error::Numeric(format!("mixed labels: {e}")))?;
    Ok(ChunkedAugmentation {
        features: FeatureMatrix::from_raw(n, d, x),
        soft_labels,
        batch_size,
        weights,
    })
}

/// Checks the invariants of an augmented batch against its source batch:
/// row-stochastic weights, probability rows, and `features ≈ W·X` within
/// `rel_tol`. Returns the first violation found.
pub fn validate_batch<T: Element>(
    source: Option<(&FeatureMatrix<T>, &SoftLabelMatrix)>,
    batch: &AugmentedBatch<T>,
    rel_tol: f64,
) -> Result<()> {
    let w = &batch.weights_used;
    WeightMatrix::new(w.n_out(), w.n_in(), w.as_slice().to_vec())?;
    for (i, row) in batch.soft_labels.rows().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&v| v < 0.0) {
            return Err(Error::Numeric(format!("soft label row {i} sums to {s}")));
        }
    }
    let Some((x, y)) = source else {
        return Ok(());
    };
    check_batch(x, y)?;
    check_mixed_features(w, x, &batch.features, rel_tol)
}

/// Checks `mixed ≈ W·X` entrywise within `rel_tol` (relative to
/// `max(|W·X|, 1)`).
pub fn check_mixed_features<T: Element>(
    w: &WeightMatrix,
    x: &FeatureMatrix<T>,
    mixed: &FeatureMatrix<T>,
    rel_tol: f64,
) -> Result<()> {
    if w.n_in() != x.n() || w.n_out() != mixed.n() || x.d() != mixed.d() {
        return Err(Error::invalid("augmented batch shape does not match its source"));
    }
    let xf = x.to_f64();
    let mut expect = vec![0.0; w.n_out() * x.d()];
    kernel::weighted_rows_into(w.as_slice(), w.n_out(), xf.as_slice(), x.n(), x.d(), &mut expect);
    for (idx, (&got, &want)) in mixed.as_slice().iter().zip(&expect).enumerate() {
        let got = got.to_f64();
        let scale = want.abs().max(1.0);
        if (got - want).abs() > rel_tol * scale {
            return Err(Error::Numeric(format!(
                "feature ({}, {}) is {got}, weights give {want}",
                idx / x.d(),
                idx % x.d()
            )));
        }
    }
    Ok(())
}
