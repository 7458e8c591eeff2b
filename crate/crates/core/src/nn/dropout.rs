use ndarray::{s, Array2};
use rand::Rng as _;

use super::ForwardCtx;
use crate::{Error, Result, Rng};

/// Inverted dropout: survivors are scaled by `1 / (1 − rate)` during training;
/// inference is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    rate: f64,
    mask: Option<Array2<f64>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must lie in [0, 1), got {rate}"
            )));
        }
        Ok(Dropout { rate, mask: None })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn set_rate(&mut self, rate: f64) -> Result<()> {
        *self = Dropout::new(rate)?;
        Ok(())
    }

    /// Draws a `rows × cols` keep-mask already scaled by `1 / (1 − rate)`.
    pub fn sample_mask(&self, rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
        let keep = 1.0 / (1.0 - self.rate);
        Array2::from_shape_simple_fn((rows, cols), || {
            if rng.random::<f64>() < self.rate {
                0.0
            } else {
                keep
            }
        })
    }

    pub fn forward_train(&mut self, x: &Array2<f64>, ctx: &mut ForwardCtx<'_>) -> Result<Array2<f64>> {
        if self.rate == 0.0 {
            self.mask = None;
            return Ok(x.clone());
        }
        if ctx.rows() != x.nrows() {
            return Err(Error::InvalidShape(format!(
                "dropout segments cover {} rows, batch has {}",
                ctx.rows(),
                x.nrows()
            )));
        }
        let mut mask = Array2::zeros(x.raw_dim());
        let mut start = 0;
        for (rows, rng) in ctx.segments.iter_mut() {
            let part = self.sample_mask(*rows, x.ncols(), rng);
            mask.slice_mut(s![start..start + *rows, ..]).assign(&part);
            start += *rows;
        }
        let out = x * &mask;
        self.mask = Some(mask);
        Ok(out)
    }

    pub fn backward(&self, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        if self.rate == 0.0 {
            return Ok(upstream.clone());
        }
        let mask = self
            .mask
            .as_ref()
            .ok_or_else(|| Error::InvalidState("dropout backward without a training forward".into()))?;
        if mask.dim() != upstream.dim() {
            return Err(Error::InvalidShape("dropout upstream shape mismatch".into()));
        }
        Ok(upstream * mask)
    }

    pub fn clear_cache(&mut self) {
        self.mask = None;
    }
}
