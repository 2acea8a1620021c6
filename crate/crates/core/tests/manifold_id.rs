//! Local ID on the synthetic manifolds, and the geometric properties the
//! estimator must respect.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use zeta_mixup::intrinsic_dim::{dataset_local_id, knn, DEFAULT_EIGEN_THRESHOLD};
use zeta_mixup::mixer::{augment_in_batches, one_hot, MixMethod};
use zeta_mixup::synthdata::{gen_crescents, gen_helix, HELIX_TURNS};
use zeta_mixup::{FeatureMatrix, Gamma};

const K: usize = 8;
const BATCH: usize = 32;

fn gaussian_points(n: usize, d: usize, seed: u64) -> FeatureMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    FeatureMatrix::new(n, d, data).unwrap()
}

/// Orthogonal factor of a Gaussian matrix.
fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

fn transform(x: &FeatureMatrix<f64>, f: impl Fn(DVector<f64>) -> DVector<f64>) -> FeatureMatrix<f64> {
    let data = x
        .rows()
        .flat_map(|r| f(DVector::from_row_slice(r)).iter().copied().collect::<Vec<_>>())
        .collect();
    FeatureMatrix::new(x.n(), x.d(), data).unwrap()
}

/// All pairs sorted by (distance, index); the reference for `knn`.
fn brute_force_knn(x: &FeatureMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    (0..x.n())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..x.n())
                .filter(|&j| j != i)
                .map(|j| {
                    let d2 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, j)
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

fn helix_mean_id(method: Option<MixMethod>, seed: u64) -> f64 {
    let ds = gen_helix(8192, 3, HELIX_TURNS, 0.0, seed).unwrap();
    let x = match method {
        None => ds.features,
        Some(m) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            augment_in_batches(&ds.features, &one_hot(&ds.labels), BATCH, m, &mut rng)
                .unwrap()
                .features
        }
    };
    dataset_local_id(&x, K, DEFAULT_EIGEN_THRESHOLD).unwrap().mean
}

#[test]
fn noiseless_crescents_are_locally_one_dimensional() {
    let ds = gen_crescents(512, 0.0, 3).unwrap();
    let s = dataset_local_id(&ds.features, K, DEFAULT_EIGEN_THRESHOLD).unwrap();
    let ones = s.per_point.iter().filter(|&&v| v == 1).count();
    assert!(ones as f64 >= 0.95 * 512.0, "{ones} of 512 points have ID 1");
}

#[test]
fn noiseless_helix_mean_id_is_near_one() {
    let m = helix_mean_id(None, 1);
    assert!((1.0..=1.3).contains(&m), "mean ID {m}");
}

#[test]
fn augmentation_inflates_helix_id_and_decreases_with_gamma() {
    let orig = helix_mean_id(None, 2);
    let mix = helix_mean_id(Some(MixMethod::Mixup { alpha: 1.0 }), 2);
    assert!(mix > orig, "mixup {mix} vs original {orig}");

    let zeta: Vec<f64> = [2.0, 4.0, 6.0, 8.0]
        .iter()
        .map(|&g| helix_mean_id(Some(MixMethod::Zeta(Gamma::new(g).unwrap())), 2))
        .collect();
    for w in zeta.windows(2) {
        assert!(w[1] <= w[0] * 1.05, "mean ID rose from {} to {}", w[0], w[1]);
    }
    assert!(zeta[3] < mix, "gamma 8 gives {} against mixup {mix}", zeta[3]);
}

#[test]
fn knn_matches_brute_force_on_random_clouds() {
    for (seed, d) in [(0, 2), (1, 5), (2, 12)] {
        let x = gaussian_points(150, d, seed);
        let table = knn(&x, 10).unwrap();
        let want = brute_force_knn(&x, 10);
        for (i, w) in want.iter().enumerate() {
            assert_eq!(table.neighbors(i), &w[..], "point {i}, d={d}");
        }
    }
}

#[test]
fn knn_breaks_lattice_ties_by_index() {
    // integer grid: many exactly equal distances
    let rows: Vec<Vec<f64>> = (0..7).flat_map(|a| (0..6).map(move |b| vec![a as f64, b as f64])).collect();
    let x = FeatureMatrix::from_rows(&rows).unwrap();
    let table = knn(&x, 6).unwrap();
    for (i, w) in brute_force_knn(&x, 6).iter().enumerate() {
        assert_eq!(table.neighbors(i), &w[..]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn local_id_is_invariant_under_rigid_motion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gen_helix(300, 3, 2.0, 0.05, seed).unwrap().features;
        let q = random_rotation(3, &mut rng);
        let t = DVector::from_fn(3, |_, _| rng.random_range(-10.0..10.0));
        let moved = transform(&x, |v| &q * v + &t);
        let a = dataset_local_id(&x, K, DEFAULT_EIGEN_THRESHOLD).unwrap();
        let b = dataset_local_id(&moved, K, DEFAULT_EIGEN_THRESHOLD).unwrap();
        prop_assert_eq!(a.per_point, b.per_point);
    }

    #[test]
    fn local_id_is_invariant_under_scaling(seed in any::<u64>(), log_c in -3.0f64..3.0) {
        let c = 10f64.powf(log_c);
        let x = gen_crescents(200, 0.1, seed).unwrap().features;
        let scaled = transform(&x, |v| v * c);
        let a = dataset_local_id(&x, K, DEFAULT_EIGEN_THRESHOLD).unwrap();
        let b = dataset_local_id(&scaled, K, DEFAULT_EIGEN_THRESHOLD).unwrap();
        prop_assert_eq!(a.per_point, b.per_point);
    }

    #[test]
    fn local_id_never_exceeds_k_or_ambient_dim(
        seed in any::<u64>(),
        d in 1usize..7,
        k in 1usize..9,
    ) {
        let x = gaussian_points(40, d, seed);
        let s = dataset_local_id(&x, k, DEFAULT_EIGEN_THRESHOLD).unwrap();
        for &v in &s.per_point {
            prop_assert!(v >= 1 && v <= k.min(d));
        }
        let valid: Vec<f64> = s.per_point.iter().map(|&v| v as f64).collect();
        let mean = valid.iter().sum::<f64>() / valid.len() as f64;
        prop_assert!((s.mean - mean).abs() <= 1e-9);
    }
}
