use ndarray::Array2;

use super::param::{Param, ParamKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Per-unit incoming weight norm bound applied after each step.
    pub max_norm: Option<f64>,
    /// Global gradient-norm bound applied before each step.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_norm: Some(4.0),
            clip_norm: Some(10.0),
        }
    }
}

/// Adam with bias correction, global-norm clipping and max-norm projection.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step_count: u64,
    first_moment: Vec<Array2<f64>>,
    second_moment: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn second_moments(&self) -> &[Array2<f64>] {
        &self.second_moment
    }

    /// One update over a single clipping group.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        self.step_groups(&mut [params])
    }

    /// One update where each group's gradients are clipped by that group's
    /// own global norm. Moments are indexed by flattened parameter order, which
    /// must stay the same across calls.
    pub fn step_groups(&mut self, groups: &mut [&mut [&mut Param]]) -> Result<()> {
        for group in groups.iter() {
            for p in group.iter() {
                if p.grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Numeric("non-finite gradient; step skipped".into()));
                }
            }
        }
        let total: usize = groups.iter().map(|g| g.len()).sum();
        if self.first_moment.is_empty() {
            for group in groups.iter() {
                for p in group.iter() {
                    self.first_moment.push(Array2::zeros(p.value.raw_dim()));
                    self.second_moment.push(Array2::zeros(p.value.raw_dim()));
                }
            }
        }
        if self.first_moment.len() != total {
            return Err(Error::InvalidShape(format!(
                "optimizer tracks {} tensors, step received {total}",
                self.first_moment.len()
            )));
        }

        if let Some(clip) = self.config.clip_norm {
            for group in groups.iter_mut() {
                clip_global_norm(group, clip);
            }
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);

        let params = groups.iter_mut().flat_map(|g| g.iter_mut());
        for ((p, m), v) in params
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            if m.dim() != p.value.dim() {
                return Err(Error::InvalidShape("parameter shape changed between steps".into()));
            }
            ndarray::Zip::from(&mut p.value)
                .and(&p.grad)
                .and(m)
                .and(v)
                .for_each(|w, &g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                });
            if let (Some(c), ParamKind::Weight) = (self.config.max_norm, p.kind) {
                project_max_norm(&mut p.value, c);
            }
        }
        Ok(())
    }
}

/// Global L2 norm of all gradients in the group.
pub(crate) fn global_norm(params: &[&mut Param]) -> f64 {
    params
        .iter()
        .flat_map(|p| p.grad.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

fn clip_global_norm(params: &mut [&mut Param], clip: f64) {
    let norm = global_norm(params);
    if norm > clip {
        let factor = clip / norm;
        for p in params.iter_mut() {
            p.grad.mapv_inplace(|g| g * factor);
        }
    }
}

/// Rescales every row whose L2 norm exceeds `max_norm` back onto the ball.
pub(crate) fn project_max_norm(weights: &mut Array2<f64>, max_norm: f64) {
    for mut row in weights.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > max_norm {
            row *= max_norm / norm;
        }
    }
}
