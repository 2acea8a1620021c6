//! End-to-end runs of the `zmix` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use zeta_mixup::io::{read_labels, read_tensor, write_labels, write_tensor, Tensor, TensorData};
use zeta_mixup::FeatureMatrix;

fn zmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = zmix(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    zmix(args).status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().expect("output line")).expect("json line")
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_crescents(dir: &TempDir, n: usize) -> PathBuf {
    let prefix = p(dir, "cres");
    ok(&["gen", "--shape", "crescents", "--n", &n.to_string(), "--noise", "0.1", "--seed", "4", "--out", s(&prefix)]);
    prefix
}

fn with(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", prefix.display()))
}

#[test]
fn gen_writes_helix_tensor_and_params() {
    let dir = TempDir::new().unwrap();
    let prefix = p(&dir, "helix");
    let out = ok(&["gen", "--shape", "helix3", "--n", "8192", "--noise", "0", "--seed", "1", "--out", s(&prefix)]);
    let t = read_tensor(&with(&prefix, "features.tensor")).unwrap();
    assert_eq!(t.shape(), &[8192, 3]);
    let params = stdout_json(&out);
    assert_eq!(params["shape"], "helix3");
    assert_eq!(params["n"], 8192);
    assert!(with(&prefix, "params.json").exists());
}

#[test]
fn gen_crescents_are_balanced() {
    let dir = TempDir::new().unwrap();
    let prefix = gen_crescents(&dir, 512);
    let t = read_tensor(&with(&prefix, "features.tensor")).unwrap();
    assert_eq!(t.shape(), &[512, 2]);
    let labels = read_labels(&with(&prefix, "labels.csv")).unwrap();
    assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 256);
    assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 256);
}

#[test]
fn gen_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a");
    let b = p(&dir, "b");
    for prefix in [&a, &b] {
        ok(&["gen", "--shape", "spirals", "--n", "64", "--noise", "0.1", "--seed", "9", "--out", s(prefix)]);
    }
    let fa = std::fs::read(with(&a, "features.tensor")).unwrap();
    let fb = std::fs::read(with(&b, "features.tensor")).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn gen_usage_errors() {
    let dir = TempDir::new().unwrap();
    let prefix = p(&dir, "x");
    assert_eq!(code(&["gen", "--shape", "torus", "--n", "8", "--seed", "1", "--out", s(&prefix)]), 2);
    assert_eq!(code(&["gen", "--shape", "helix3", "--n", "8", "--seed", "1"]), 2);
    assert_eq!(code(&["gen", "--shape", "helix3", "--n", "8", "--out", s(&prefix)]), 2);
}

#[test]
fn augment_keeps_shape_and_validates() {
    let dir = TempDir::new().unwrap();
    let data = gen_crescents(&dir, 512);
    let aug = p(&dir, "aug");
    let input = with(&data, "features.tensor");
    ok(&[
        "augment", "--input", s(&input), "--labels", s(&with(&data, "labels.csv")),
        "--method", "zeta", "--gamma", "2.8", "--seed", "7", "--out", s(&aug),
    ]);
    let t = read_tensor(&with(&aug, "features.tensor")).unwrap();
    assert_eq!(t.shape(), &[512, 2]);
    assert_eq!(read_tensor(&with(&aug, "weights.tensor")).unwrap().shape(), &[512, 512]);
    assert_eq!(read_tensor(&with(&aug, "soft_labels.tensor")).unwrap().shape(), &[512, 2]);
    ok(&[
        "validate", "--weights", s(&with(&aug, "weights.tensor")),
        "--soft-labels", s(&with(&aug, "soft_labels.tensor")),
        "--features", s(&with(&aug, "features.tensor")), "--input", s(&input),
    ]);
}

#[test]
fn augment_in_chunks_validates_blockwise() {
    let dir = TempDir::new().unwrap();
    let data = gen_crescents(&dir, 128);
    let input = with(&data, "features.tensor");
    for method in ["zeta", "mixup"] {
        let aug = p(&dir, method);
        ok(&[
            "augment", "--input", s(&input), "--labels", s(&with(&data, "labels.csv")),
            "--method", method, "--batch-size", "32", "--seed", "2", "--out", s(&aug),
        ]);
        assert_eq!(read_tensor(&with(&aug, "weights.tensor")).unwrap().shape(), &[128, 32]);
        ok(&[
            "validate", "--weights", s(&with(&aug, "weights.tensor")),
            "--soft-labels", s(&with(&aug, "soft_labels.tensor")),
            "--features", s(&with(&aug, "features.tensor")), "--input", s(&input),
        ]);
    }
    let aug = p(&dir, "bad");
    assert_eq!(
        code(&[
            "augment", "--input", s(&input), "--labels", s(&with(&data, "labels.csv")),
            "--method", "zeta", "--batch-size", "30", "--seed", "2", "--out", s(&aug),
        ]),
        2
    );
}

#[test]
fn augment_below_gamma_min_warns() {
    let dir = TempDir::new().unwrap();
    let data = gen_crescents(&dir, 16);
    let out = ok(&[
        "augment", "--input", s(&with(&data, "features.tensor")), "--labels", s(&with(&data, "labels.csv")),
        "--method", "zeta", "--gamma", "1.0", "--seed", "1", "--out", s(&p(&dir, "aug")),
    ]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1.72865"), "stderr: {err}");
}

#[test]
fn mixup_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let data = gen_crescents(&dir, 64);
    let run = |name: &str| {
        let prefix = p(&dir, name);
        ok(&[
            "augment", "--input", s(&with(&data, "features.tensor")), "--labels", s(&with(&data, "labels.csv")),
            "--method", "mixup", "--alpha", "1.0", "--seed", "3", "--out", s(&prefix),
        ]);
        ["features.tensor", "soft_labels.tensor", "weights.tensor"]
            .map(|f| std::fs::read(with(&prefix, f)).unwrap())
    };
    assert_eq!(run("one"), run("two"));
}

#[test]
fn augment_rejects_label_count_mismatch() {
    let dir = TempDir::new().unwrap();
    let data = gen_crescents(&dir, 16);
    let labels = p(&dir, "short.csv");
    write_labels(&labels, &[0, 1, 0]).unwrap();
    assert_eq!(
        code(&[
            "augment", "--input", s(&with(&data, "features.tensor")), "--labels", s(&labels),
            "--method", "zeta", "--seed", "1", "--out", s(&p(&dir, "aug")),
        ]),
        3
    );
}

#[test]
fn validate_flags_broken_weights() {
    let dir = TempDir::new().unwrap();
    let w = p(&dir, "w.tensor");
    let y = p(&dir, "y.tensor");
    write_tensor(&w, &Tensor::new(vec![2, 2], TensorData::F64(vec![0.6, 0.6, 0.5, 0.5])).unwrap()).unwrap();
    write_tensor(&y, &Tensor::new(vec![2, 2], TensorData::F64(vec![1.0, 0.0, 0.5, 0.5])).unwrap()).unwrap();
    assert_eq!(code(&["validate", "--weights", s(&w), "--soft-labels", s(&y)]), 4);
}

fn plane_fixture(path: &Path) {
    // 25 x 40 unit grid on two orthonormal directions of ℝ¹²
    let u: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / 12f64.sqrt()).collect();
    let v: Vec<f64> = (0..12).map(|i| if i < 6 { 1.0 } else { -1.0 } / 12f64.sqrt()).collect();
    let mut data = Vec::with_capacity(1000 * 12);
    for a in 0..25 {
        for b in 0..40 {
            data.extend((0..12).map(|c| a as f64 * u[c] + b as f64 * v[c]));
        }
    }
    let x = FeatureMatrix::new(1000, 12, data).unwrap();
    write_tensor(path, &Tensor::from_features(&x)).unwrap();
}

#[test]
fn id_on_plane_and_helix_fixtures() {
    let dir = TempDir::new().unwrap();
    let plane = p(&dir, "plane.tensor");
    plane_fixture(&plane);
    let out = ok(&["id", "--input", s(&plane), "--k", "8", "--out", s(&p(&dir, "plane"))]);
    assert_eq!(stdout_json(&out)["mean"], 2.0);
    let full: Value = serde_json::from_slice(&std::fs::read(p(&dir, "plane.id.json")).unwrap()).unwrap();
    assert_eq!(full["per_point"].as_array().unwrap().len(), 1000);
    assert_eq!(full["std"], 0.0);

    let helix = p(&dir, "helix");
    ok(&["gen", "--shape", "helix3", "--n", "8192", "--seed", "1", "--out", s(&helix)]);
    let out = ok(&["id", "--input", s(&with(&helix, "features.tensor")), "--k", "8", "--out", s(&helix)]);
    let mean = stdout_json(&out)["mean"].as_f64().unwrap();
    assert!((1.0..=1.3).contains(&mean), "helix mean ID {mean}");
}

#[test]
fn id_rejects_k_not_below_n() {
    let dir = TempDir::new().unwrap();
    let data = gen_crescents(&dir, 16);
    let input = with(&data, "features.tensor");
    assert_eq!(code(&["id", "--input", s(&input), "--k", "16", "--out", s(&p(&dir, "id"))]), 2);
}

fn write_probs(path: &Path, n: usize, k: usize, data: Vec<f64>) {
    write_tensor(path, &Tensor::new(vec![n, k], TensorData::F64(data)).unwrap()).unwrap();
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn eval_on_matching_one_hot_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.tensor");
    let onehot = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    write_probs(&a, 3, 3, onehot);
    ok(&["eval", "--oracle", s(&a), "--soft-labels", s(&a), "--out", s(&p(&dir, "m"))]);
    let rows = read_csv(&p(&dir, "m.metrics.csv"));
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r, &vec![i as f64, 0.0, 0.0]);
    }
}

#[test]
fn eval_entropy_filter_selects_confident_rows() {
    let dir = TempDir::new().unwrap();
    let oracle = p(&dir, "o.tensor");
    let soft = p(&dir, "s.tensor");
    // entropies in nats: 0, ≈0.0560, ≈0.199, ln 2
    let o = vec![1.0, 0.0, 0.99, 0.01, 0.95, 0.05, 0.5, 0.5];
    let q = vec![0.7, 0.3, 0.6, 0.4, 0.5, 0.5, 0.2, 0.8];
    write_probs(&oracle, 4, 2, o.clone());
    write_probs(&soft, 4, 2, q);
    let out = ok(&[
        "eval", "--oracle", s(&oracle), "--soft-labels", s(&soft),
        "--entropy-filter", "0.1", "--bins", "4", "--kde", "--out", s(&p(&dir, "m")),
    ]);
    let expected = o
        .chunks(2)
        .filter(|r| -r.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>() < 0.1)
        .count();
    assert_eq!(expected, 2);
    assert_eq!(stdout_json(&out)["n_filtered"], 2);
    let hist = read_csv(&p(&dir, "m.ce.hist.csv"));
    let width = hist[1][0] - hist[0][0];
    let area: f64 = hist.iter().map(|r| r[1] * width).sum();
    assert!((area - 1.0).abs() < 1e-9);
    assert_eq!(read_csv(&p(&dir, "m.ce.kde.csv")).len(), 256);
    assert!(p(&dir, "m.entropy.hist.csv").exists());
}

#[test]
fn eval_rejects_row_mismatch() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.tensor");
    let b = p(&dir, "b.tensor");
    write_probs(&a, 2, 2, vec![1.0, 0.0, 0.0, 1.0]);
    write_probs(&b, 1, 2, vec![0.5, 0.5]);
    assert_eq!(code(&["eval", "--oracle", s(&a), "--soft-labels", s(&b), "--out", s(&p(&dir, "m"))]), 3);
}

#[test]
fn bench_rejects_few_iterations() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&["bench", "--iters", "5", "--seed", "1", "--out", s(&p(&dir, "b"))]), 2);
    assert_eq!(code(&["bench", "--warmup", "2", "--seed", "1", "--out", s(&p(&dir, "b"))]), 2);
}

#[test]
fn bench_report_is_recomputable() {
    let dir = TempDir::new().unwrap();
    let prefix = p(&dir, "b");
    ok(&["bench", "--batch", "8", "--dims", "3x16x16", "--iters", "11", "--warmup", "3", "--seed", "1", "--out", s(&prefix)]);
    let report: Value = serde_json::from_slice(&std::fs::read(with(&prefix, "bench.json")).unwrap()).unwrap();
    for method in ["zeta", "mixup"] {
        let r = &report[method];
        assert_eq!(r["batch_shape"], serde_json::json!([8, 3, 16, 16]));
        let mut t: Vec<f64> = r["times_us"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(t.len(), 11);
        let mean = t.iter().sum::<f64>() / 11.0;
        t.sort_by(f64::total_cmp);
        assert_eq!(r["median_us"].as_f64().unwrap(), t[5]);
        assert!((r["mean_us"].as_f64().unwrap() - mean).abs() <= 1e-9 * mean);
    }
}

#[test]
fn gamma_min_prints_root() {
    let out = ok(&["gamma-min"]);
    let v = stdout_json(&out);
    assert!((v["gamma_min"].as_f64().unwrap() - 1.72865).abs() < 1e-4);
}
