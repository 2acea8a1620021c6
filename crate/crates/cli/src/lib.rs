//! Command-line driver: dataset generation, augmentation, local ID
//! estimation, label metrics and the augmentation benchmark.
//!
//! Every output lands in files named from the `--out` prefix. Exit codes:
//! 0 success, 2 usage, 3 format or I/O, 4 numeric failure.

pub mod bench;
pub mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<zeta_mixup::Error> for CliError {
    fn from(e: zeta_mixup::Error) -> Self {
        use zeta_mixup::Error as E;
        match e {
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            E::Format { .. } | E::Io(_) => CliError::Format(e.to_string()),
            E::Numeric(_) => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zmix", version, about = "zeta-mixup experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic dataset.
    Gen(GenArgs),
    /// Augment a batch with zeta-mixup or mixup.
    Augment(AugmentArgs),
    /// Estimate per-point local intrinsic dimension.
    Id(IdArgs),
    /// Entropy and cross entropy of soft labels against oracle predictions.
    Eval(EvalArgs),
    /// Time zeta-mixup against mixup on one random batch.
    Bench(BenchArgs),
    /// Re-check augmented outputs: row-stochastic weights, probability rows
    /// and, given the source batch, features equal to W·X.
    Validate(ValidateArgs),
    /// Print the exponent above which the leading weight dominates.
    GammaMin(GammaMinArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DtypeArg {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Zeta,
    Mixup,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// crescents, spirals, helix3 or helix12.
    #[arg(long)]
    pub shape: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DtypeArg::F32)]
    pub dtype: DtypeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Features tensor, `n x d`.
    #[arg(long)]
    pub input: PathBuf,
    /// Label CSV with one class index per row.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = 2.8)]
    pub gamma: f64,
    #[arg(long, default_value_t = zeta_mixup::mixer::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Mix consecutive chunks of this many rows independently; must divide
    /// the row count. Defaults to one batch holding every row.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = zeta_mixup::intrinsic_dim::DEFAULT_EIGEN_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Oracle class probabilities, `n x k` tensor.
    #[arg(long)]
    pub oracle: PathBuf,
    /// Soft labels, `n x k` tensor.
    #[arg(long)]
    pub soft_labels: PathBuf,
    /// Only rows whose oracle entropy (nats) is below this enter the
    /// cross-entropy distribution.
    #[arg(long, default_value_t = 0.1)]
    pub entropy_filter: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Also export Gaussian KDE curves (Scott bandwidth).
    #[arg(long)]
    pub kde: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Per-sample shape, flattened before mixing.
    #[arg(long, default_value = "3x224x224")]
    pub dims: String,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// `n x n` weights, or `n x b` when the batch was mixed in chunks of
    /// `b` rows.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub soft_labels: PathBuf,
    /// Augmented features; checked against W·X when `--input` is given.
    #[arg(long, requires = "input")]
    pub features: Option<PathBuf>,
    /// Source features of the batch.
    #[arg(long, requires = "features")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    pub rel_tol: f64,
}

#[derive(Debug, Args)]
pub struct GammaMinArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Optional JSON output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Augment(a) => commands::augment(&a),
        Command::Id(a) => commands::id(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::GammaMin(a) => commands::gamma_min(&a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let e: CliError = zeta_mixup::Error::Numeric("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_NUMERIC);
        let e: CliError = zeta_mixup::Error::InvalidArgument("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }
}
