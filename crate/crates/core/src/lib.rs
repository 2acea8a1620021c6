//! ζ-mixup: convex combinations of `N >= 2` samples weighted by a randomly
//! permuted, normalized p-series.
//!
//! The crate is organized by task:
//!
//! - [`zeta`]: weight generation (truncated zeta normalization, uniform rank
//!   orderings, the dominance threshold and the mixup equivalence mapping).
//! - [`mixer`]: batch augmentation with ζ-mixup and classic pairwise mixup.
//! - [`synthdata`]: crescents, spirals and helices with controlled noise.
//! - [`intrinsic_dim`]: kNN + local PCA intrinsic dimension estimates.
//! - [`labelmetrics`]: entropy / cross entropy of oracle predictions and
//!   histogram/KDE export.
//! - [`io`]: the self-describing tensor file and label CSV formats.

pub mod error;
pub mod intrinsic_dim;
pub mod io;
pub mod labelmetrics;
pub mod matrix;
pub mod mixer;
pub mod synthdata;
pub mod zeta;

pub use error::{Error, Result};
pub use matrix::{ClassLabels, Element, FeatureMatrix, SoftLabelMatrix};
pub use zeta::{Gamma, Ordering, WeightMatrix, WeightVector, GAMMA_MIN};
