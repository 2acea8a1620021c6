//! Realism and label-correctness metrics computed from an external oracle's
//! class probabilities.
//!
//! All logarithms are natural (nats). Cross entropy takes the oracle as the
//! reference distribution: `CE = -Σ oracle_i · ln(soft_i)`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Row-sum tolerance for oracle outputs.
pub const PROB_SUM_TOL: f64 = 1e-6;
/// Floor applied to soft-label entries before taking the log.
pub const CE_CLAMP: f64 = 1e-12;
/// Number of points at which the KDE curve is sampled.
pub const KDE_POINTS: usize = 256;

fn check_prob(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if let Some(v) = p.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has invalid entry {v}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::invalid(format!("{what} sums to {s}")));
    }
    Ok(())
}

/// Shannon entropy `-Σ p ln p` with `0·ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_prob(p, "probability vector")?;
    Ok(entropy_unchecked(p))
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    // -0.0 for one-hot inputs
    h.max(0.0)
}

/// `-Σ oracle_i · ln(max(soft_i, 1e-12))`.
pub fn cross_entropy(oracle_p: &[f64], soft_label: &[f64]) -> Result<f64> {
    check_prob(oracle_p, "oracle prediction")?;
    check_prob(soft_label, "soft label")?;
    if oracle_p.len() != soft_label.len() {
        return Err(Error::invalid(format!(
            "oracle has {} classes, soft label has {}",
            oracle_p.len(),
            soft_label.len()
        )));
    }
    Ok(cross_entropy_unchecked(oracle_p, soft_label))
}

fn cross_entropy_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let ce: f64 = p
        .iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| -pi * qi.max(CE_CLAMP).ln())
        .sum();
    ce.max(0.0)
}

/// Oracle probabilities paired row by row with soft labels.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    n: usize,
    k: usize,
    oracle: Vec<f64>,
    soft: Vec<f64>,
}

/// Per-row metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMetrics {
    pub entropy: f64,
    pub cross_entropy: f64,
}

impl PredictionSet {
    pub fn new(n: usize, k: usize, oracle: Vec<f64>, soft: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("predictions need at least one class"));
        }
        if oracle.len() != n * k || soft.len() != n * k {
            return Err(Error::invalid(format!(
                "expected {n}x{k} oracle and soft label matrices, got {} and {} values",
                oracle.len(),
                soft.len()
            )));
        }
        for (i, (p, q)) in oracle.chunks_exact(k).zip(soft.chunks_exact(k)).enumerate() {
            check_prob(p, &format!("oracle row {i}"))?;
            check_prob(q, &format!("soft label row {i}"))?;
        }
        Ok(Self { n, k, oracle, soft })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metrics(&self) -> Vec<RowMetrics> {
        self.oracle
            .par_chunks_exact(self.k)
            .zip(self.soft.par_chunks_exact(self.k))
            .map(|(p, q)| RowMetrics {
                entropy: entropy_unchecked(p),
                cross_entropy: cross_entropy_unchecked(p, q),
            })
            .collect()
    }
}

/// Equal-width histogram normalized to unit area.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|i| self.lo + (i as f64 + 0.5) * self.width)
    }

    pub fn area(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `n^(-1/5) · σ̂`.
    Scott,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub histogram: Histogram,
    pub kde: Option<Kde>,
}

fn write_xy_csv(path: &Path, xy: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let mut s = String::from("x,density\n");
    for (x, y) in xy {
        writeln!(s, "{x},{y}").expect("write to string");
    }
    write_atomic(path, s.as_bytes())
}

impl Distribution {
    pub fn write_histogram_csv(&self, path: &Path) -> Result<()> {
        let h = &self.histogram;
        write_xy_csv(path, h.centers().zip(h.density.iter().copied()))
    }

    /// Writes the KDE curve; a no-op when no KDE was requested.
    pub fn write_kde_csv(&self, path: &Path) -> Result<()> {
        match &self.kde {
            Some(k) => write_xy_csv(path, k.x.iter().copied().zip(k.density.iter().copied())),
            None => Ok(()),
        }
    }
}

/// Histogram over `[min, max]` and an optional Gaussian KDE sampled at
/// [`KDE_POINTS`] points spanning three bandwidths beyond the data.
///
/// A zero-width range gets a single unit-width bin centered on the value.
/// A zero sample deviation makes Scott's rule fall back to `σ̂ = 1`.
pub fn export_distribution(values: &[f64], bins: usize, kde: Option<Bandwidth>) -> Result<Distribution> {
    if values.is_empty() {
        return Err(Error::invalid("cannot summarize an empty sample"));
    }
    if bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sample contains non-finite values"));
    }
    let n = values.len() as f64;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let histogram = if hi > lo {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram {
            lo,
            width,
            density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        }
    } else {
        Histogram {
            lo: lo - 0.5,
            width: 1.0,
            density: vec![1.0],
        }
    };

    let kde = match kde {
        None => None,
        Some(bw) => {
            let h = match bw {
                Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
                Bandwidth::Fixed(h) => {
                    return Err(Error::invalid(format!("bandwidth must be positive, got {h}")))
                }
                Bandwidth::Scott => {
                    let mean = values.iter().sum::<f64>() / n;
                    let var = if values.len() > 1 {
                        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                    } else {
                        0.0
                    };
                    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                    n.powf(-0.2) * sd
                }
            };
            let (a, b) = (lo - 3.0 * h, hi + 3.0 * h);
            let step = (b - a) / (KDE_POINTS - 1) as f64;
            let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
            let x: Vec<f64> = (0..KDE_POINTS).map(|i| a + i as f64 * step).collect();
            let density = x
                .par_iter()
                .map(|&xi| {
                    values
                        .iter()
                        .map(|&v| (-0.5 * ((xi - v) / h).powi(2)).exp())
                        .sum::<f64>()
                        * norm
                })
                .collect();
            Some(Kde { bandwidth: h, x, density })
        }
    };

    Ok(Distribution { histogram, kde })
}
