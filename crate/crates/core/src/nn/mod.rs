//! Minimal dense network engine with manual reverse-mode gradients.
//!
//! Everything is `f64` and row-major: a batch is an `n × features` matrix.
//! Layers cache what their backward pass needs only in training mode; the
//! inference path takes `&self` and never mutates state.

mod activation;
mod adam;
mod batchnorm;
mod dense;
mod dropout;
mod loss;
mod param;
mod stack;

pub use activation::Relu;
pub use adam::{Adam, AdamConfig};
pub use batchnorm::BatchNorm;
pub use dense::Dense;
pub use dropout::Dropout;
pub use loss::{crossentropy_loss, mse_loss, softmax};
pub use param::{Param, ParamKind};
pub use stack::{Layer, Stack};

use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-call context for a training-mode forward pass.
///
/// A batch may be the concatenation of several row segments (e.g. source rows
/// followed by target rows). Each segment draws its dropout masks from its own
/// generator, and batch-norm statistics are computed over the first
/// `stat_rows` rows only.
pub struct ForwardCtx<'a> {
    pub segments: Vec<(usize, &'a mut Rng)>,
    pub stat_rows: usize,
}

impl<'a> ForwardCtx<'a> {
    /// One segment covering `rows` rows; batch statistics use all of them.
    pub fn single(rows: usize, rng: &'a mut Rng) -> Self {
        ForwardCtx {
            segments: vec![(rows, rng)],
            stat_rows: rows,
        }
    }

    pub fn rows(&self) -> usize {
        self.segments.iter().map(|(n, _)| n).sum()
    }
}
