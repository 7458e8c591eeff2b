use ndarray::Array2;

use crate::{Error, Result};

/// Rectified linear unit. The subgradient at zero is taken as zero.
#[derive(Debug, Clone, Default)]
pub struct Relu {
    input: Option<Array2<f64>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn infer(&self, x: &Array2<f64>) -> Array2<f64> {
        x.mapv(|v| v.max(0.0))
    }

    pub fn forward_train(&mut self, x: &Array2<f64>) -> Array2<f64> {
        self.input = Some(x.clone());
        self.infer(x)
    }

    pub fn backward(&self, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| Error::InvalidState("relu backward without a training forward".into()))?;
        if input.dim() != upstream.dim() {
            return Err(Error::InvalidShape("relu upstream shape mismatch".into()));
        }
        let mut out = upstream.clone();
        out.zip_mut_with(input, |g, &x| {
            if x <= 0.0 {
                *g = 0.0;
            }
        });
        Ok(out)
    }

    /// Input of the last training-mode forward pass.
    pub fn last_input(&self) -> Option<&Array2<f64>> {
        self.input.as_ref()
    }

    pub fn clear_cache(&mut self) {
        self.input = None;
    }
}
