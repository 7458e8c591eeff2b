use ndarray::{Array2, Axis};
use rand::Rng as _;

use super::param::{Param, ParamKind};
use crate::{Error, Result, Rng};

/// Fully connected layer: `y = x · Wᵀ + b`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Array2<f64>>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn new(in_units: usize, out_units: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (in_units + out_units) as f64).sqrt();
        let weight =
            Array2::from_shape_simple_fn((out_units, in_units), || rng.random_range(-limit..limit));
        Self::from_parts(weight, Array2::zeros((1, out_units)))
    }

    /// Build from explicit weights (out × in) and bias (1 × out).
    pub fn from_parts(weight: Array2<f64>, bias: Array2<f64>) -> Self {
        Dense {
            weight: Param::new(weight, ParamKind::Weight),
            bias: Param::new(bias, ParamKind::Bias),
            input: None,
        }
    }

    pub fn in_units(&self) -> usize {
        self.weight.value.ncols()
    }

    pub fn out_units(&self) -> usize {
        self.weight.value.nrows()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.in_units() {
            return Err(Error::InvalidShape(format!(
                "dense layer expects {} input columns, got {}",
                self.in_units(),
                x.ncols()
            )));
        }
        if self.bias.value.dim() != (1, self.out_units()) {
            return Err(Error::InvalidShape("bias does not match output units".into()));
        }
        Ok(())
    }

    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(x.dot(&self.weight.value.t()) + &self.bias.value)
    }

    pub fn forward_train(&mut self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let out = self.infer(x)?;
        self.input = Some(x.clone());
        Ok(out)
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| Error::InvalidState("dense backward without a training forward".into()))?;
        if upstream.dim() != (input.nrows(), self.out_units()) {
            return Err(Error::InvalidShape(format!(
                "upstream gradient {:?} does not match forward output ({}, {})",
                upstream.dim(),
                input.nrows(),
                self.out_units()
            )));
        }
        self.weight.grad += &upstream.t().dot(input);
        // row-ordered sum so trailing all-zero rows never change the result
        let mut bias_grad = self.bias.grad.row_mut(0);
        for row in upstream.axis_iter(Axis(0)) {
            bias_grad += &row;
        }
        Ok(upstream.dot(&self.weight.value))
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }

    pub fn clear_cache(&mut self) {
        self.input = None;
    }
}
