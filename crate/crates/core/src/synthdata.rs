//! Two-class crescents and spirals in the plane, and 1-D helices in ℝ³ and
//! ℝ¹².
//!
//! Every generator first draws all curve parameters, then all noise, from
//! the same seeded stream. Two datasets with equal seeds therefore share
//! their clean points regardless of `noise_sigma`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{ClassLabels, FeatureMatrix};

/// Spiral growth rate `a` in `r = a·θ`; adjacent arms sit `a·π = 1` apart.
pub const SPIRAL_RATE: f64 = 1.0 / PI;
pub const SPIRAL_THETA: (f64, f64) = (PI / 2.0, 3.0 * PI);
pub const HELIX_PITCH: f64 = 0.15;
pub const HELIX_TURNS: f64 = 6.0;
/// Highest harmonic of the ℝ¹² curve; `2 * 6 = 12` coordinates.
const HARMONICS: usize = 6;

type GenRng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Crescents,
    Spirals,
    Helix3,
    Helix12,
}

impl Shape {
    pub fn ambient_dim(self) -> usize {
        match self {
            Shape::Crescents | Shape::Spirals => 2,
            Shape::Helix3 => 3,
            Shape::Helix12 => 12,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Crescents => "crescents",
            Shape::Spirals => "spirals",
            Shape::Helix3 => "helix3",
            Shape::Helix12 => "helix12",
        })
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crescents" => Ok(Shape::Crescents),
            "spirals" => Ok(Shape::Spirals),
            "helix3" => Ok(Shape::Helix3),
            "helix12" => Ok(Shape::Helix12),
            other => Err(Error::invalid(format!("unknown shape {other:?}"))),
        }
    }
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorParams {
    pub shape: Shape,
    pub n: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub ambient_dim: usize,
    /// Shape constants (arc offsets, spiral rate, helix pitch and turns).
    pub curve: CurveParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveParams {
    /// Arc 0: `(cos t, sin t)`; arc 1: `(1 - cos t, 0.5 - sin t)`, `t ∈ [0, π]`.
    Crescents { radius: f64, offset: [f64; 2] },
    /// Arm `c`: `r = rate·θ` at angle `θ + c·π`.
    Spirals { rate: f64, theta_min: f64, theta_max: f64 },
    /// `t ∈ [0, 2π·turns]`.
    Helix { pitch: f64, turns: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub features: FeatureMatrix<f64>,
    pub labels: ClassLabels,
    pub params: GeneratorParams,
}

fn check_common(n: usize, noise_sigma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be positive"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }
    Ok(())
}

fn check_two_class(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "two-class generators need an even n >= 2, got {n}"
        )));
    }
    Ok(())
}

fn add_noise(data: &mut [f64], sigma: f64, rng: &mut GenRng) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    for v in data {
        *v += normal.sample(rng);
    }
}

fn two_class_labels(n: usize) -> ClassLabels {
    let labels = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    ClassLabels::new(labels, 2).expect("labels are 0 or 1")
}

/// Point on crescent `class` at parameter `t ∈ [0, π]`.
pub fn crescent_point(class: usize, t: f64) -> [f64; 2] {
    if class == 0 {
        [t.cos(), t.sin()]
    } else {
        [1.0 - t.cos(), 0.5 - t.sin()]
    }
}

/// Point on spiral arm `class` at parameter `θ`.
pub fn spiral_point(class: usize, theta: f64) -> [f64; 2] {
    let r = SPIRAL_RATE * theta;
    let phase = theta + class as f64 * PI;
    [r * phase.cos(), r * phase.sin()]
}

/// Two interleaving half circles, `n / 2` points each.
pub fn gen_crescents(n: usize, noise_sigma: f64, seed: u64) -> Result<SyntheticDataset> {
    check_common(n, noise_sigma)?;
    check_two_class(n)?;
    let mut rng = GenRng::seed_from_u64(seed);
    let ts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=PI)).collect();
    let mut data: Vec<f64> = ts
        .iter()
        .enumerate()
        .flat_map(|(i, &t)| crescent_point(usize::from(i >= n / 2), t))
        .collect();
    add_noise(&mut data, noise_sigma, &mut rng);
    Ok(SyntheticDataset {
        features: FeatureMatrix::new(n, 2, data)?,
        labels: two_class_labels(n),
        params: GeneratorParams {
            shape: Shape::Crescents,
            n,
            noise_sigma,
            seed,
            ambient_dim: 2,
            curve: CurveParams::Crescents {
                radius: 1.0,
                offset: [1.0, 0.5],
            },
        },
    })
}

/// Two Archimedean spiral arms offset by π in phase.
pub fn gen_spirals(n: usize, noise_sigma: f64, seed: u64) -> Result<SyntheticDataset> {
    check_common(n, noise_sigma)?;
    check_two_class(n)?;
    let mut rng = GenRng::seed_from_u64(seed);
    let (lo, hi) = SPIRAL_THETA;
    let thetas: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let mut data: Vec<f64> = thetas
        .iter()
        .enumerate()
        .flat_map(|(i, &th)| spiral_point(usize::from(i >= n / 2), th))
        .collect();
    add_noise(&mut data, noise_sigma, &mut rng);
    Ok(SyntheticDataset {
        features: FeatureMatrix::new(n, 2, data)?,
        labels: two_class_labels(n),
        params: GeneratorParams {
            shape: Shape::Spirals,
            n,
            noise_sigma,
            seed,
            ambient_dim: 2,
            curve: CurveParams::Spirals {
                rate: SPIRAL_RATE,
                theta_min: lo,
                theta_max: hi,
            },
        },
    })
}

/// Point on the helix with the given ambient dimension.
pub fn helix_point(ambient_dim: usize, t: f64, pitch: f64, out: &mut Vec<f64>) {
    if ambient_dim == 3 {
        out.extend_from_slice(&[t.cos(), t.sin(), pitch * t]);
    } else {
        for h in 1..=HARMONICS {
            let a = h as f64 * t;
            out.extend_from_slice(&[a.cos(), a.sin()]);
        }
    }
}

/// A 1-D curve in ℝ³ (`(cos t, sin t, pitch·t)`) or ℝ¹² (the harmonics
/// `cos kt, sin kt` for `k = 1..=6`). Labels are a single class.
pub fn gen_helix(
    n: usize,
    ambient_dim: usize,
    turns: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    gen_helix_with_pitch(n, ambient_dim, turns, HELIX_PITCH, noise_sigma, seed)
}

pub fn gen_helix_with_pitch(
    n: usize,
    ambient_dim: usize,
    turns: f64,
    pitch: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    check_common(n, noise_sigma)?;
    let shape = match ambient_dim {
        3 => Shape::Helix3,
        12 => Shape::Helix12,
        other => {
            return Err(Error::invalid(format!(
                "helix ambient dimension must be 3 or 12, got {other}"
            )))
        }
    };
    if !(turns > 0.0) || !turns.is_finite() {
        return Err(Error::invalid(format!("turns must be positive, got {turns}")));
    }
    if !pitch.is_finite() {
        return Err(Error::invalid("pitch must be finite"));
    }
    let mut rng = GenRng::seed_from_u64(seed);
    let t_max = 2.0 * PI * turns;
    let ts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=t_max)).collect();
    let mut data = Vec::with_capacity(n * ambient_dim);
    for &t in &ts {
        helix_point(ambient_dim, t, pitch, &mut data);
    }
    add_noise(&mut data, noise_sigma, &mut rng);
    Ok(SyntheticDataset {
        features: FeatureMatrix::new(n, ambient_dim, data)?,
        labels: ClassLabels::new(vec![0; n], 1)?,
        params: GeneratorParams {
            shape,
            n,
            noise_sigma,
            seed,
            ambient_dim,
            curve: CurveParams::Helix { pitch, turns },
        },
    })
}

/// Dispatches on `shape` with the default helix pitch and turns.
pub fn generate(shape: Shape, n: usize, noise_sigma: f64, seed: u64) -> Result<SyntheticDataset> {
    match shape {
        Shape::Crescents => gen_crescents(n, noise_sigma, seed),
        Shape::Spirals => gen_spirals(n, noise_sigma, seed),
        Shape::Helix3 => gen_helix(n, 3, HELIX_TURNS, noise_sigma, seed),
        Shape::Helix12 => gen_helix(n, 12, HELIX_TURNS, noise_sigma, seed),
    }
}
