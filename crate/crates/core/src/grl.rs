//! Gradient reversal gate.
//!
//! Identity on the way forward; on the way back the gradient is multiplied by
//! `−λ`. Placed between the shared layers and the domain classifier, it lets
//! the classifier minimize its loss while the shared layers receive the
//! negated (maximizing) signal from the same backward pass.

use ndarray::Array2;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversalGate {
    lambda: f64,
}

impl ReversalGate {
    pub fn new(lambda: f64) -> Result<Self> {
        let mut gate = ReversalGate { lambda: 0.0 };
        gate.set_lambda(lambda)?;
        Ok(gate)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "reversal weight must be finite and non-negative, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(())
    }

    pub fn forward(&self, input: &Array2<f64>) -> Array2<f64> {
        input.clone()
    }

    pub fn backward(&self, upstream: &Array2<f64>) -> Array2<f64> {
        let scale = -self.lambda;
        upstream.mapv(|g| scale * g)
    }
}

impl Default for ReversalGate {
    fn default() -> Self {
        ReversalGate { lambda: 0.0 }
    }
}
