use ndarray::Array2;

use super::{BatchNorm, Dense, Dropout, ForwardCtx, Mode, Param, Relu};
use crate::{Result, Rng};

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    BatchNorm(BatchNorm),
    Relu(Relu),
    Dropout(Dropout),
}

/// Sequential composition of layers.
#[derive(Debug, Clone, Default)]
pub struct Stack {
    pub layers: Vec<Layer>,
}

impl Stack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    /// Appends `Dense → BatchNorm → ReLU → Dropout`.
    pub fn push_hidden(
        &mut self,
        in_units: usize,
        out_units: usize,
        dropout: f64,
        bn_momentum: f64,
        bn_epsilon: f64,
        rng: &mut Rng,
    ) -> Result<()> {
        self.push(Layer::Dense(Dense::new(in_units, out_units, rng)));
        self.push(Layer::BatchNorm(BatchNorm::with_settings(
            out_units,
            bn_momentum,
            bn_epsilon,
        )));
        self.push(Layer::Relu(Relu::new()));
        self.push(Layer::Dropout(Dropout::new(dropout)?));
        Ok(())
    }

    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense(d) => d.infer(&h)?,
                Layer::BatchNorm(bn) => bn.infer(&h)?,
                Layer::Relu(r) => r.infer(&h),
                Layer::Dropout(_) => h,
            };
        }
        Ok(h)
    }

    /// Outputs after every ReLU (the activations of each hidden layer), in
    /// inference mode.
    pub fn hidden_activations(&self, x: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
        let mut h = x.clone();
        let mut out = Vec::new();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense(d) => d.infer(&h)?,
                Layer::BatchNorm(bn) => bn.infer(&h)?,
                Layer::Relu(r) => {
                    let a = r.infer(&h);
                    out.push(a.clone());
                    a
                }
                Layer::Dropout(_) => h,
            };
        }
        Ok(out)
    }

    pub fn forward(&mut self, x: &Array2<f64>, mode: Mode, ctx: &mut ForwardCtx<'_>) -> Result<Array2<f64>> {
        if mode == Mode::Infer {
            return self.infer(x);
        }
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = match layer {
                Layer::Dense(d) => d.forward_train(&h)?,
                Layer::BatchNorm(bn) => bn.forward_train(&h, ctx.stat_rows)?,
                Layer::Relu(r) => r.forward_train(&h),
                Layer::Dropout(d) => d.forward_train(&h, ctx)?,
            };
        }
        Ok(h)
    }

    pub fn backward(&mut self, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        let mut g = upstream.clone();
        for layer in self.layers.iter_mut().rev() {
            g = match layer {
                Layer::Dense(d) => d.backward(&g)?,
                Layer::BatchNorm(bn) => bn.backward(&g)?,
                Layer::Relu(r) => r.backward(&g)?,
                Layer::Dropout(d) => d.backward(&g)?,
            };
        }
        Ok(g)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => out.extend(d.params_mut()),
                Layer::BatchNorm(bn) => out.extend(bn.params_mut()),
                Layer::Relu(_) | Layer::Dropout(_) => {}
            }
        }
        out
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => out.extend(d.params()),
                Layer::BatchNorm(bn) => out.extend(bn.params()),
                Layer::Relu(_) | Layer::Dropout(_) => {}
            }
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn dense_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| matches!(l, Layer::Dense(_)))
            .count()
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &Dense> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn dense_layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.layers.iter_mut().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn set_dropout_rates(&mut self, first: Option<f64>, rest: f64) -> Result<()> {
        let mut seen_first = false;
        for layer in &mut self.layers {
            if let Layer::Dropout(d) = layer {
                match (first, seen_first) {
                    (Some(rate), false) => d.set_rate(rate)?,
                    _ => d.set_rate(rest)?,
                }
                seen_first = true;
            }
        }
        Ok(())
    }

    /// Inputs of every ReLU from the last training-mode forward pass.
    pub fn relu_inputs(&self) -> Vec<&Array2<f64>> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Relu(r) => r.last_input(),
                _ => None,
            })
            .collect()
    }

    pub fn clear_caches(&mut self) {
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => d.clear_cache(),
                Layer::BatchNorm(bn) => bn.clear_cache(),
                Layer::Relu(r) => r.clear_cache(),
                Layer::Dropout(d) => d.clear_cache(),
            }
        }
    }
}
