//! Subcommand implementations.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use zeta_mixup::intrinsic_dim::dataset_local_id;
use zeta_mixup::io::{read_labels, read_tensor, write_atomic, write_labels, write_tensor, Dtype, Tensor, TensorData, TensorElement};
use zeta_mixup::labelmetrics::{export_distribution, Bandwidth, PredictionSet};
use zeta_mixup::mixer::{augment_in_batches, check_mixed_features, one_hot, MixMethod};
use zeta_mixup::synthdata::{generate, Shape};
use zeta_mixup::zeta::{solve_gamma_min, zeta_tail_corrected, GammaStatus, ZETA_SOLVE_TERMS};
use zeta_mixup::{ClassLabels, FeatureMatrix, Gamma, SoftLabelMatrix, WeightMatrix, GAMMA_MIN};

use crate::bench::{self, BenchConfig};
use crate::{AugmentArgs, BenchArgs, CliError, DtypeArg, EvalArgs, GammaMinArgs, GenArgs, IdArgs, Method, ValidateArgs};

/// `prefix` with `.suffix` appended to its last component.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn format_err(e: impl std::fmt::Display) -> CliError {
    CliError::Format(e.to_string())
}

fn numeric_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    write_atomic(path, s.as_bytes())?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<(Tensor, usize, usize), CliError> {
    let t = read_tensor(path)?;
    let (r, c) = t
        .dims2()
        .map_err(|e| format_err(format!("{}: {e}", path.display())))?;
    Ok((t, r, c))
}

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let shape: Shape = a.shape.parse()?;
    let ds = generate(shape, a.n, a.noise, a.seed)?;
    let tensor = match a.dtype {
        DtypeArg::F64 => Tensor::from_features(&ds.features),
        DtypeArg::F32 => {
            let data = ds.features.as_slice().iter().map(|&v| v as f32).collect();
            Tensor::from_features(&FeatureMatrix::new(ds.features.n(), ds.features.d(), data)?)
        }
    };
    write_tensor(&with_suffix(&a.out, "features.tensor"), &tensor)?;
    write_labels(&with_suffix(&a.out, "labels.csv"), ds.labels.as_slice())?;
    let params = serde_json::to_value(&ds.params).expect("params serialize");
    write_json(&with_suffix(&a.out, "params.json"), &params)?;
    println!("{}", serde_json::to_string(&params).expect("params serialize"));
    Ok(())
}

pub fn augment(a: &AugmentArgs) -> Result<(), CliError> {
    let (t, n, _) = read_matrix(&a.input)?;
    let labels = read_labels(&a.labels)?;
    if labels.len() != n {
        return Err(CliError::Format(format!(
            "{} has {} labels for {n} feature rows",
            a.labels.display(),
            labels.len()
        )));
    }
    let y = one_hot(&ClassLabels::infer(labels)?);
    if a.method == Method::Zeta {
        let g = Gamma::new(a.gamma)?;
        if g.status() == GammaStatus::BelowMin {
            eprintln!(
                "warning: gamma {} is below {GAMMA_MIN}; the leading weight may not dominate",
                a.gamma
            );
        }
    }
    match t.dtype() {
        Dtype::F32 => augment_typed::<f32>(a, t.into_features()?, &y),
        Dtype::F64 => augment_typed::<f64>(a, t.into_features()?, &y),
    }
}

fn augment_typed<T: TensorElement>(
    a: &AugmentArgs,
    x: FeatureMatrix<T>,
    y: &SoftLabelMatrix,
) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let method = match a.method {
        Method::Zeta => MixMethod::Zeta(Gamma::new(a.gamma)?),
        Method::Mixup => MixMethod::Mixup { alpha: a.alpha },
    };
    let b = a.batch_size.unwrap_or(x.n());
    let out = augment_in_batches(&x, y, b, method, &mut rng)?;
    let weights: Vec<f64> = out.weights.iter().flat_map(|w| w.as_slice().iter().copied()).collect();
    let weights = Tensor::new(vec![x.n(), b], TensorData::F64(weights))?;
    write_tensor(&with_suffix(&a.out, "features.tensor"), &Tensor::from_features(&out.features))?;
    write_tensor(&with_suffix(&a.out, "soft_labels.tensor"), &Tensor::from_soft_labels(&out.soft_labels))?;
    write_tensor(&with_suffix(&a.out, "weights.tensor"), &weights)?;
    println!(
        "{}",
        json!({
            "method": match a.method { Method::Zeta => "zeta", Method::Mixup => "mixup" },
            "n": out.features.n(),
            "d": out.features.d(),
            "k": out.soft_labels.k(),
            "batch_size": b,
        })
    );
    Ok(())
}

pub fn id(a: &IdArgs) -> Result<(), CliError> {
    let (t, _, _) = read_matrix(&a.input)?;
    let summary = match t.dtype() {
        Dtype::F32 => dataset_local_id(&t.into_features::<f32>()?, a.k, a.threshold)?,
        Dtype::F64 => dataset_local_id(&t.into_features::<f64>()?, a.k, a.threshold)?,
    };
    let mut s = summary.to_json();
    s.push('\n');
    write_atomic(&with_suffix(&a.out, "id.json"), s.as_bytes())?;
    println!(
        "{}",
        json!({ "k": summary.k, "mean": summary.mean, "std": summary.std, "n_degenerate": summary.n_degenerate })
    );
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let (oracle, n, k) = read_matrix(&a.oracle)?;
    let (soft, n2, k2) = read_matrix(&a.soft_labels)?;
    if (n, k) != (n2, k2) {
        return Err(CliError::Format(format!(
            "oracle is {n}x{k} but soft labels are {n2}x{k2}"
        )));
    }
    if n == 0 {
        return Err(CliError::Format("no rows to evaluate".into()));
    }
    if !(a.entropy_filter > 0.0) {
        return Err(CliError::Usage("--entropy-filter must be positive".into()));
    }
    let set = PredictionSet::new(n, k, oracle.data().to_f64(), soft.data().to_f64()).map_err(format_err)?;
    let rows = set.metrics();

    let mut csv = String::from("index,entropy,cross_entropy\n");
    for (i, r) in rows.iter().enumerate() {
        writeln!(csv, "{i},{},{}", r.entropy, r.cross_entropy).expect("write to string");
    }
    write_atomic(&with_suffix(&a.out, "metrics.csv"), csv.as_bytes())?;

    let kde = a.kde.then_some(Bandwidth::Scott);
    let entropies: Vec<f64> = rows.iter().map(|r| r.entropy).collect();
    let h = export_distribution(&entropies, a.bins, kde)?;
    h.write_histogram_csv(&with_suffix(&a.out, "entropy.hist.csv"))?;
    h.write_kde_csv(&with_suffix(&a.out, "entropy.kde.csv"))?;

    let kept: Vec<f64> = rows
        .iter()
        .filter(|r| r.entropy < a.entropy_filter)
        .map(|r| r.cross_entropy)
        .collect();
    if kept.is_empty() {
        eprintln!("warning: no row has oracle entropy below {}; cross-entropy export skipped", a.entropy_filter);
    } else {
        let ce = export_distribution(&kept, a.bins, kde)?;
        ce.write_histogram_csv(&with_suffix(&a.out, "ce.hist.csv"))?;
        ce.write_kde_csv(&with_suffix(&a.out, "ce.kde.csv"))?;
    }
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mean_ce = mean(&kept);
    println!(
        "{}",
        json!({
            "n": n,
            "n_filtered": kept.len(),
            "mean_entropy": mean(&entropies),
            "mean_cross_entropy_filtered": if mean_ce.is_nan() { serde_json::Value::Null } else { json!(mean_ce) },
        })
    );
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig {
        batch: a.batch,
        dims: bench::parse_dims(&a.dims)?,
        iters: a.iters,
        warmup: a.warmup,
        seed: a.seed,
    };
    let out = bench::run(&cfg)?;
    write_json(&with_suffix(&a.out, "bench.json"), &serde_json::to_value(&out).expect("report serializes"))?;
    println!(
        "{}",
        json!({
            "zeta_median_us": out.zeta.median_us,
            "mixup_median_us": out.mixup.median_us,
            "ratio": out.ratio,
        })
    );
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let (wt, wr, wc) = read_matrix(&a.weights)?;
    let (yt, yr, yc) = read_matrix(&a.soft_labels)?;
    if wr != yr {
        return Err(CliError::Format(format!(
            "{wr} weight rows but {yr} soft label rows"
        )));
    }
    let w = WeightMatrix::new(wr, wc, wt.data().to_f64()).map_err(numeric_err)?;
    SoftLabelMatrix::new(yr, yc, yt.data().to_f64()).map_err(numeric_err)?;
    if let (Some(fp), Some(ip)) = (&a.features, &a.input) {
        let (ft, fr, _) = read_matrix(fp)?;
        let (it, ir, _) = read_matrix(ip)?;
        if ft.dtype() != it.dtype() {
            return Err(CliError::Format("features and input differ in dtype".into()));
        }
        if fr != wr || ir != wr || wr % wc != 0 {
            return Err(CliError::Format(format!(
                "{wr}x{wc} weights do not fit {ir} input and {fr} augmented rows"
            )));
        }
        match ft.dtype() {
            Dtype::F32 => check_chunks(&w, &it.into_features::<f32>()?, &ft.into_features::<f32>()?, a.rel_tol)?,
            Dtype::F64 => check_chunks(&w, &it.into_features::<f64>()?, &ft.into_features::<f64>()?, a.rel_tol)?,
        }
    }
    println!("ok");
    Ok(())
}

/// `mixed ≈ W·X` for each chunk of `w.n_in()` consecutive rows.
fn check_chunks<T: TensorElement>(
    w: &WeightMatrix,
    x: &FeatureMatrix<T>,
    mixed: &FeatureMatrix<T>,
    rel_tol: f64,
) -> Result<(), CliError> {
    let b = w.n_in();
    for start in (0..x.n()).step_by(b) {
        let idx: Vec<usize> = (start..start + b).collect();
        let wb = WeightMatrix::new(b, b, w.as_slice()[start * b..(start + b) * b].to_vec()).map_err(numeric_err)?;
        check_mixed_features(&wb, &x.select_rows(&idx)?, &mixed.select_rows(&idx)?, rel_tol).map_err(|e| match e {
            zeta_mixup::Error::Numeric(_) => numeric_err(e),
            other => format_err(other),
        })?;
    }
    Ok(())
}

pub fn gamma_min(a: &GammaMinArgs) -> Result<(), CliError> {
    let g = solve_gamma_min(a.tolerance)?;
    let z = zeta_tail_corrected(g, ZETA_SOLVE_TERMS)?;
    let v = json!({ "gamma_min": g, "zeta": z });
    if let Some(out) = &a.out {
        write_json(out, &v)?;
    }
    println!("{v}");
    Ok(())
}
