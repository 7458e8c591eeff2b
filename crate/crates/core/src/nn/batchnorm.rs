use ndarray::{Array1, Array2};

use super::param::{Param, ParamKind};
use crate::{Error, Result};

/// Per-feature batch normalization with learned scale and shift.
///
/// In training mode the batch mean and (biased) variance are taken over the
/// first `stat_rows` rows; any remaining rows are normalized with those same
/// statistics. Running statistics follow `r ← momentum·r + (1 − momentum)·batch`.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub scale: Param,
    pub shift: Param,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub epsilon: f64,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    stat_rows: usize,
}

impl BatchNorm {
    pub const DEFAULT_MOMENTUM: f64 = 0.99;
    pub const DEFAULT_EPSILON: f64 = 1e-5;

    pub fn new(units: usize) -> Self {
        Self::with_settings(units, Self::DEFAULT_MOMENTUM, Self::DEFAULT_EPSILON)
    }

    pub fn with_settings(units: usize, momentum: f64, epsilon: f64) -> Self {
        BatchNorm {
            scale: Param::new(Array2::ones((1, units)), ParamKind::Scale),
            shift: Param::new(Array2::zeros((1, units)), ParamKind::Shift),
            running_mean: Array1::zeros(units),
            running_var: Array1::ones(units),
            momentum,
            epsilon,
            cache: None,
        }
    }

    pub fn units(&self) -> usize {
        self.scale.value.ncols()
    }

    fn check(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.units() {
            return Err(Error::InvalidShape(format!(
                "batch norm over {} units got {} columns",
                self.units(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Inference transform using running statistics only.
    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x)?;
        let mut out = x.clone();
        let scale = self.scale.value.row(0);
        let shift = self.shift.value.row(0);
        for mut row in out.rows_mut() {
            for j in 0..row.len() {
                let inv = 1.0 / (self.running_var[j] + self.epsilon).sqrt();
                row[j] = scale[j] * (row[j] - self.running_mean[j]) * inv + shift[j];
            }
        }
        Ok(out)
    }

    pub fn forward_train(&mut self, x: &Array2<f64>, stat_rows: usize) -> Result<Array2<f64>> {
        self.check(x)?;
        if stat_rows < 2 || stat_rows > x.nrows() {
            return Err(Error::InvalidBatch(format!(
                "batch norm needs at least 2 statistics rows (got {stat_rows} of {})",
                x.nrows()
            )));
        }
        let units = self.units();
        let n = stat_rows as f64;
        let mut mean = Array1::<f64>::zeros(units);
        for row in x.rows().into_iter().take(stat_rows) {
            mean += &row;
        }
        mean /= n;
        let mut var = Array1::<f64>::zeros(units);
        for row in x.rows().into_iter().take(stat_rows) {
            for j in 0..units {
                let d = row[j] - mean[j];
                var[j] += d * d;
            }
        }
        var /= n;

        let inv_std = var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        let mut xhat = x.clone();
        for mut row in xhat.rows_mut() {
            for j in 0..units {
                row[j] = (row[j] - mean[j]) * inv_std[j];
            }
        }
        let out = &xhat * &self.scale.value + &self.shift.value;

        let m = self.momentum;
        self.running_mean
            .zip_mut_with(&mean, |r, &b| *r = m * *r + (1.0 - m) * b);
        self.running_var
            .zip_mut_with(&var, |r, &b| *r = m * *r + (1.0 - m) * b);
        self.cache = Some(Cache {
            xhat,
            inv_std,
            stat_rows,
        });
        Ok(out)
    }

    /// Exact gradient through the batch statistics. Rows past `stat_rows`
    /// influence the result only through the shared mean and variance.
    pub fn backward(&mut self, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidState("batch norm backward without a training forward".into()))?;
        if upstream.dim() != cache.xhat.dim() {
            return Err(Error::InvalidShape("batch norm upstream shape mismatch".into()));
        }
        let units = self.units();
        let scale = self.scale.value.row(0).to_owned();

        let mut sum_g = Array1::<f64>::zeros(units);
        let mut sum_g_xhat = Array1::<f64>::zeros(units);
        {
            let mut dscale = self.scale.grad.row_mut(0);
            let mut dshift = self.shift.grad.row_mut(0);
            for (dy, xh) in upstream.rows().into_iter().zip(cache.xhat.rows()) {
                for j in 0..units {
                    dscale[j] += dy[j] * xh[j];
                    dshift[j] += dy[j];
                    let g = dy[j] * scale[j];
                    sum_g[j] += g;
                    sum_g_xhat[j] += g * xh[j];
                }
            }
        }

        let n = cache.stat_rows as f64;
        let mut dx = Array2::<f64>::zeros(upstream.raw_dim());
        for (i, ((mut out, dy), xh)) in dx
            .rows_mut()
            .into_iter()
            .zip(upstream.rows())
            .zip(cache.xhat.rows())
            .enumerate()
        {
            for j in 0..units {
                let g = dy[j] * scale[j];
                let r = cache.inv_std[j];
                out[j] = if i < cache.stat_rows {
                    r * g - (r / n) * (sum_g[j] + xh[j] * sum_g_xhat[j])
                } else {
                    r * g
                };
            }
        }
        Ok(dx)
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.scale, &mut self.shift]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.scale, &self.shift]
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardizes_batch() {
        let mut bn = BatchNorm::new(1);
        let out = bn.forward_train(&array![[-1.0], [1.0]], 2).unwrap();
        let mean = out.mean().unwrap();
        let var = out.mapv(|v| (v - mean).powi(2)).mean().unwrap();
        assert!(mean.abs() < 1e-15);
        assert!((var - 1.0 / (1.0 + 1e-5)).abs() < 1e-12);
    }

    #[test]
    fn scale_and_shift_applied() {
        let mut bn = BatchNorm::new(1);
        bn.scale.value[[0, 0]] = 2.0;
        bn.shift.value[[0, 0]] = 3.0;
        let out = bn
            .forward_train(&array![[-1.2], [0.3], [0.9], [0.0]], 4)
            .unwrap();
        assert!((out.mean().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_row_batch_rejected() {
        let mut bn = BatchNorm::new(2);
        assert!(matches!(
            bn.forward_train(&array![[1.0, 2.0]], 1),
            Err(Error::InvalidBatch(_))
        ));
    }

    #[test]
    fn running_stats_update() {
        let mut bn = BatchNorm::with_settings(1, 0.5, 1e-5);
        bn.forward_train(&array![[1.0], [3.0]], 2).unwrap();
        assert_eq!(bn.running_mean[0], 1.0);
        assert_eq!(bn.running_var[0], 1.0);
        assert!(bn.running_var.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn inference_is_deterministic() {
        let mut bn = BatchNorm::new(2);
        bn.forward_train(&array![[1.0, 4.0], [3.0, -2.0], [0.5, 0.5]], 3)
            .unwrap();
        let x = array![[0.1, 0.2], [7.0, -3.0]];
        let a = bn.infer(&x).unwrap();
        let b = bn.infer(&x).unwrap();
        assert_eq!(a, b);
    }
}
