//! Timing harness comparing ζ-mixup with mixup on one random batch.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use zeta_mixup::mixer::{mixup_into, one_hot, zeta_mixup_into, DEFAULT_ALPHA};
use zeta_mixup::{ClassLabels, FeatureMatrix, Gamma};

use crate::CliError;

pub const MIN_ITERS: usize = 10;
pub const MIN_WARMUP: usize = 3;
pub const BENCH_GAMMA: f64 = 2.8;
pub const BENCH_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub method: String,
    pub batch_shape: Vec<usize>,
    pub iterations: usize,
    pub times_us: Vec<f64>,
    pub median_us: f64,
    pub mean_us: f64,
    /// Population standard deviation.
    pub std_us: f64,
}

impl BenchReport {
    pub fn from_samples(method: &str, batch_shape: Vec<usize>, times_us: Vec<f64>) -> Self {
        let n = times_us.len() as f64;
        let mean_us = times_us.iter().sum::<f64>() / n;
        let std_us = (times_us.iter().map(|t| (t - mean_us).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            method: method.to_string(),
            batch_shape,
            iterations: times_us.len(),
            median_us: median(&times_us),
            mean_us,
            std_us,
            times_us,
        }
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub batch: usize,
    pub dims: Vec<usize>,
    pub iters: usize,
    pub warmup: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOutcome {
    pub zeta: BenchReport,
    pub mixup: BenchReport,
    /// `median(zeta) / median(mixup)`.
    pub ratio: f64,
}

/// Parses `3x224x224` into its factors.
pub fn parse_dims(s: &str) -> Result<Vec<usize>, CliError> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("cannot parse dims '{s}'")))?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::Usage(format!("dims must be positive, got '{s}'")));
    }
    Ok(dims)
}

/// Times both methods on the same random batch. Iterations alternate
/// between the methods so that drift in machine state hits both alike.
pub fn run(cfg: &BenchConfig) -> Result<BenchOutcome, CliError> {
    if cfg.iters < MIN_ITERS {
        return Err(CliError::Usage(format!("--iters must be at least {MIN_ITERS}")));
    }
    if cfg.warmup < MIN_WARMUP {
        return Err(CliError::Usage(format!("--warmup must be at least {MIN_WARMUP}")));
    }
    if cfg.batch < 2 {
        return Err(CliError::Usage("--batch must be at least 2".into()));
    }
    let d: usize = cfg.dims.iter().product();
    let n = cfg.batch;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data: Vec<f32> = (0..n * d).map(|_| rng.random::<f32>()).collect();
    let x = FeatureMatrix::new(n, d, data)?;
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..BENCH_CLASSES)).collect();
    let y = one_hot(&ClassLabels::new(labels, BENCH_CLASSES)?);
    let gamma = Gamma::new(BENCH_GAMMA)?;

    let mut out_x = vec![0f32; n * d];
    let mut out_y = vec![0f64; n * BENCH_CLASSES];
    let mut zeta_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut mix_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut t_zeta = Vec::with_capacity(cfg.iters);
    let mut t_mix = Vec::with_capacity(cfg.iters);

    for it in 0..cfg.warmup + cfg.iters {
        let t0 = Instant::now();
        zeta_mixup_into(&x, &y, gamma, &mut zeta_rng, &mut out_x, &mut out_y)?;
        let dz = t0.elapsed();
        std::hint::black_box(&out_x);
        let t1 = Instant::now();
        mixup_into(&x, &y, DEFAULT_ALPHA, &mut mix_rng, &mut out_x, &mut out_y)?;
        let dm = t1.elapsed();
        std::hint::black_box(&out_x);
        if it >= cfg.warmup {
            t_zeta.push(dz.as_secs_f64() * 1e6);
            t_mix.push(dm.as_secs_f64() * 1e6);
        }
    }

    let mut shape = vec![n];
    shape.extend_from_slice(&cfg.dims);
    let zeta = BenchReport::from_samples("zeta_mixup", shape.clone(), t_zeta);
    let mixup = BenchReport::from_samples("mixup", shape, t_mix);
    let ratio = zeta.median_us / mixup.median_us;
    Ok(BenchOutcome { zeta, mixup, ratio })
}
