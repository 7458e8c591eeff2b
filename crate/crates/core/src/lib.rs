//! Domain-adversarial neural networks (DANN) for continuous attribute regression.
//!
//! A shared representation feeds a regression head trained on labeled source
//! data and, through a gradient reversal gate, a domain classifier trained on
//! source plus unlabeled target data. The shared layers learn features that
//! help the regressor while confusing the domain classifier.
//!
//! Layout:
//! - [`nn`]: dense layers, batch norm, dropout, losses and Adam with max-norm
//!   and global-norm gradient clipping.
//! - [`grl`]: the gradient reversal gate.
//! - [`model`]: the three-part network, its objective and parameter files.
//! - [`trainer`]: lambda schedule, balanced batching, training loops and trials.
//! - [`metrics`]: RMSE, Pearson, CCC, domain accuracy and Welch's t-test.
//! - [`data`]: CSV ingestion, trimmed per-domain normalization, splits and a
//!   synthetic covariate-shift generator.
//! - [`harness`]: config-driven experiments (sweep, compare, visualize).

pub mod data;
pub mod error;
pub mod grl;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod parallel;
pub mod trainer;

pub use error::{Error, Result};

/// Random generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeded generator on an independent stream.
pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
