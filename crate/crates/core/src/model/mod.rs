//! The three-part DANN network: shared feature layers, a task regressor and a
//! domain classifier behind a [`ReversalGate`].
//!
//! During a training step the batch is `source rows ++ target rows`. Shared
//! batch-norm statistics come from the source rows only, and source and target
//! rows draw dropout masks from separate generators. With these two rules the
//! source path of a step is bit-for-bit the computation a source-only network
//! performs, so a detached domain branch (λ = 0) reproduces the baseline.

mod io;

pub use io::{load_model, read_model, save_model, write_model, FORMAT_TAG};

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, Axis};

use crate::grl::ReversalGate;
use crate::nn::{crossentropy_loss, mse_loss, softmax, BatchNorm, Dropout, ForwardCtx, Layer, Mode, Param, Stack};
use crate::{seeded_rng, Error, Result, Rng};

pub const SOURCE_CLASS: usize = 0;
pub const TARGET_CLASS: usize = 1;

pub const DEFAULT_DROPOUT_INPUT: f64 = 0.2;
pub const DEFAULT_DROPOUT_HIDDEN: f64 = 0.5;
pub const DEFAULT_HIDDEN_WIDTH: usize = 256;

const INIT_STREAM: u64 = 0x1417;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Deep,
    Shallow,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Deep => "deep",
            Variant::Shallow => "shallow",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep" => Ok(Variant::Deep),
            "shallow" => Ok(Variant::Shallow),
            other => Err(Error::InvalidSpec(format!("unknown variant `{other}`"))),
        }
    }
}

/// Layer counts and widths. "Layers" count dense layers: a task head with two
/// layers is one hidden block plus the linear output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSpec {
    pub variant: Variant,
    pub input_dim: usize,
    pub shared_layers: usize,
    pub task_layers: usize,
    pub domain_layers: usize,
    pub hidden_width: usize,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

impl NetworkSpec {
    pub fn deep(input_dim: usize, shared_layers: usize) -> Self {
        NetworkSpec {
            variant: Variant::Deep,
            input_dim,
            shared_layers,
            task_layers: 2,
            domain_layers: 2,
            hidden_width: DEFAULT_HIDDEN_WIDTH,
            bn_momentum: BatchNorm::DEFAULT_MOMENTUM,
            bn_epsilon: BatchNorm::DEFAULT_EPSILON,
        }
    }

    pub fn shallow(input_dim: usize) -> Self {
        NetworkSpec {
            variant: Variant::Shallow,
            shared_layers: 1,
            task_layers: 1,
            ..Self::deep(input_dim, 1)
        }
    }

    pub fn for_variant(variant: Variant, input_dim: usize, shared_layers: usize) -> Self {
        match variant {
            Variant::Deep => Self::deep(input_dim, shared_layers),
            Variant::Shallow => Self::shallow(input_dim),
        }
    }

    pub fn with_width(mut self, hidden_width: usize) -> Self {
        self.hidden_width = hidden_width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.input_dim == 0 || self.hidden_width == 0 {
            return fail("input_dim and hidden_width must be positive".into());
        }
        if !(1..=4).contains(&self.shared_layers) {
            return fail(format!("shared_layers must be 1..=4, got {}", self.shared_layers));
        }
        if self.domain_layers != 2 {
            return fail(format!("domain_layers must be 2, got {}", self.domain_layers));
        }
        match self.variant {
            Variant::Deep if self.task_layers != 2 => {
                fail(format!("deep networks use 2 task layers, got {}", self.task_layers))
            }
            Variant::Shallow if self.shared_layers != 1 || self.task_layers != 1 => fail(format!(
                "shallow networks use 1 shared and 1 task layer, got {} and {}",
                self.shared_layers, self.task_layers
            )),
            _ => Ok(()),
        }?;
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) || !(self.bn_epsilon > 0.0) {
            return fail("batch norm momentum must lie in (0, 1) and epsilon be positive".into());
        }
        Ok(())
    }
}

/// Multipliers on the two loss gradients entering the backward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub task: f64,
    pub domain: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            task: 1.0,
            domain: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub task: f64,
    /// Mean cross-entropy over source ∪ target rows, when the branch ran.
    pub domain: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub task_loss: f64,
    pub domain_loss: f64,
    pub composite: f64,
}

#[derive(Debug, Clone)]
pub struct DannModel {
    spec: NetworkSpec,
    pub shared: Stack,
    pub task_head: Stack,
    pub domain_head: Option<Stack>,
    pub gate: ReversalGate,
}

impl DannModel {
    /// Full DANN network. Parameters are drawn shared → task → domain from one
    /// seeded stream, so [`DannModel::build_baseline`] with the same seed starts
    /// from identical shared and task parameters.
    pub fn build(spec: NetworkSpec, seed: u64) -> Result<Self> {
        Self::build_inner(spec, seed, true)
    }

    /// Shared layers and task head only: the source-only / within-target baseline.
    pub fn build_baseline(spec: NetworkSpec, seed: u64) -> Result<Self> {
        Self::build_inner(spec, seed, false)
    }

    fn build_inner(spec: NetworkSpec, seed: u64, with_domain: bool) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded_rng(seed, INIT_STREAM);
        let width = spec.hidden_width;
        let (m, e) = (spec.bn_momentum, spec.bn_epsilon);

        let mut shared = Stack::new();
        shared.push(Layer::Dropout(Dropout::new(DEFAULT_DROPOUT_INPUT)?));
        let mut fan_in = spec.input_dim;
        for _ in 0..spec.shared_layers {
            shared.push_hidden(fan_in, width, DEFAULT_DROPOUT_HIDDEN, m, e, &mut rng)?;
            fan_in = width;
        }

        let head = |outputs: usize, layers: usize, rng: &mut Rng| -> Result<Stack> {
            let mut stack = Stack::new();
            for _ in 1..layers {
                stack.push_hidden(width, width, DEFAULT_DROPOUT_HIDDEN, m, e, rng)?;
            }
            stack.push(Layer::Dense(crate::nn::Dense::new(width, outputs, rng)));
            Ok(stack)
        };
        let task_head = head(1, spec.task_layers, &mut rng)?;
        let domain_head = if with_domain {
            Some(head(2, spec.domain_layers, &mut rng)?)
        } else {
            None
        };
        Ok(DannModel {
            spec,
            shared,
            task_head,
            domain_head,
            gate: ReversalGate::default(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn has_domain_branch(&self) -> bool {
        self.domain_head.is_some()
    }

    /// Dense layer counts as (shared, task, domain).
    pub fn dense_counts(&self) -> (usize, usize, usize) {
        (
            self.shared.dense_count(),
            self.task_head.dense_count(),
            self.domain_head.as_ref().map_or(0, Stack::dense_count),
        )
    }

    /// Input dropout applies to the raw features; every other dropout layer
    /// uses the hidden rate.
    pub fn set_dropout(&mut self, input: f64, hidden: f64) -> Result<()> {
        self.shared.set_dropout_rates(Some(input), hidden)?;
        self.task_head.set_dropout_rates(None, hidden)?;
        if let Some(d) = &mut self.domain_head {
            d.set_dropout_rates(None, hidden)?;
        }
        Ok(())
    }

    fn check_features(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.spec.input_dim {
            return Err(Error::InvalidShape(format!(
                "model expects {} features, got {}",
                self.spec.input_dim,
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Shared representation in inference mode.
    pub fn represent(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_features(features)?;
        self.shared.infer(features)
    }

    /// Activations after each shared hidden layer, inference mode.
    pub fn shared_activations(&self, features: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
        self.check_features(features)?;
        self.shared.hidden_activations(features)
    }

    pub fn predict_task(&self, features: &Array2<f64>) -> Result<Array1<f64>> {
        let h = self.represent(features)?;
        Ok(self.task_head.infer(&h)?.column(0).to_owned())
    }

    /// Softmax probabilities `[source, target]` per row.
    pub fn predict_domain(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        let head = self
            .domain_head
            .as_ref()
            .ok_or_else(|| Error::InvalidState("model has no domain branch".into()))?;
        let h = self.represent(features)?;
        Ok(softmax(&head.infer(&self.gate.forward(&h))?))
    }

    /// Losses in inference mode. The domain loss is the mean cross-entropy
    /// over the union of both batches; the composite is
    /// `task_loss − λ · domain_loss`.
    pub fn objective(
        &self,
        labeled: &Array2<f64>,
        scores: &Array1<f64>,
        unlabeled: &Array2<f64>,
        lambda: f64,
    ) -> Result<Objective> {
        if labeled.nrows() == 0 {
            return Err(Error::InvalidBatch("objective needs labeled rows".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be non-negative".into()));
        }
        let (task_loss, _) = mse_loss(&self.predict_task(labeled)?, scores)?;
        let union = ndarray::concatenate(Axis(0), &[labeled.view(), unlabeled.view()])
            .map_err(|e| Error::InvalidShape(e.to_string()))?;
        let head = self
            .domain_head
            .as_ref()
            .ok_or_else(|| Error::InvalidState("model has no domain branch".into()))?;
        let logits = head.infer(&self.represent(&union)?)?;
        let (domain_loss, _) = crossentropy_loss(&logits, &domain_onehot(labeled.nrows(), unlabeled.nrows()))?;
        Ok(Objective {
            task_loss,
            domain_loss,
            composite: task_loss - lambda * domain_loss,
        })
    }

    pub fn zero_grad(&mut self) {
        self.shared.zero_grad();
        self.task_head.zero_grad();
        if let Some(d) = &mut self.domain_head {
            d.zero_grad();
        }
    }

    /// Training-mode forward and backward for one batch; leaves fresh
    /// gradients in every parameter.
    ///
    /// `source` rows carry `labels`; `target` rows (if any) are unlabeled and
    /// only feed the domain branch. Source rows draw dropout from `task_rng`,
    /// everything on the target or domain side from `domain_rng`.
    pub fn forward_backward(
        &mut self,
        source: &Array2<f64>,
        labels: &Array1<f64>,
        target: Option<&Array2<f64>>,
        weights: LossWeights,
        task_rng: &mut Rng,
        domain_rng: &mut Rng,
    ) -> Result<StepLosses> {
        self.check_features(source)?;
        let n_s = source.nrows();
        if labels.len() != n_s {
            return Err(Error::InvalidShape("labels do not match source rows".into()));
        }
        let target = match (target, self.domain_head.is_some()) {
            (Some(t), true) => {
                self.check_features(t)?;
                Some(t)
            }
            (Some(_), false) => {
                return Err(Error::InvalidState("target rows given to a model without a domain branch".into()))
            }
            (None, _) => None,
        };
        self.zero_grad();

        let n_t = target.map_or(0, |t| t.nrows());
        let x = match target {
            Some(t) => ndarray::concatenate(Axis(0), &[source.view(), t.view()])
                .map_err(|e| Error::InvalidShape(e.to_string()))?,
            None => source.clone(),
        };
        let h = {
            let mut segments = vec![(n_s, &mut *task_rng)];
            if n_t > 0 {
                segments.push((n_t, &mut *domain_rng));
            }
            let mut ctx = ForwardCtx {
                segments,
                stat_rows: n_s,
            };
            self.shared.forward(&x, Mode::Train, &mut ctx)?
        };

        let h_source = h.slice(s![..n_s, ..]).to_owned();
        let pred = {
            let mut ctx = ForwardCtx::single(n_s, task_rng);
            self.task_head.forward(&h_source, Mode::Train, &mut ctx)?
        };
        let (task_loss, task_grad) = mse_loss(&pred.column(0).to_owned(), labels)?;
        let upstream = (task_grad * weights.task).insert_axis(Axis(1));
        let dh_task = self.task_head.backward(&upstream)?;

        let mut domain_loss = None;
        let mut dh = Array2::<f64>::zeros(h.raw_dim());
        if let (Some(head), true) = (self.domain_head.as_mut(), n_t > 0) {
            let z = self.gate.forward(&h);
            let rows = z.nrows();
            let mut ctx = ForwardCtx::single(rows, domain_rng);
            let logits = head.forward(&z, Mode::Train, &mut ctx)?;
            let (loss, grad) = crossentropy_loss(&logits, &domain_onehot(n_s, n_t))?;
            let dz = head.backward(&(grad * weights.domain))?;
            dh = self.gate.backward(&dz);
            domain_loss = Some(loss);
        }
        {
            let mut top = dh.slice_mut(s![..n_s, ..]);
            top += &dh_task;
        }
        self.shared.backward(&dh)?;

        if !task_loss.is_finite() || domain_loss.is_some_and(|l| !l.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite loss (task {task_loss}, domain {domain_loss:?})"
            )));
        }
        Ok(StepLosses {
            task: task_loss,
            domain: domain_loss,
        })
    }

    /// Parameter groups for optimization: shared + task first, then the
    /// domain head (if present).
    pub fn param_groups_mut(&mut self) -> Vec<Vec<&mut Param>> {
        let mut feature_task = self.shared.params_mut();
        feature_task.extend(self.task_head.params_mut());
        let mut groups = vec![feature_task];
        if let Some(d) = &mut self.domain_head {
            groups.push(d.params_mut());
        }
        groups
    }

    pub fn clear_caches(&mut self) {
        self.shared.clear_caches();
        self.task_head.clear_caches();
        if let Some(d) = &mut self.domain_head {
            d.clear_caches();
        }
    }

    /// Largest per-unit incoming weight norm over every dense layer.
    pub fn max_unit_norm(&self) -> f64 {
        let stacks = [Some(&self.shared), Some(&self.task_head), self.domain_head.as_ref()];
        stacks
            .into_iter()
            .flatten()
            .flat_map(|s| s.dense_layers())
            .flat_map(|d| d.weight.value.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// One-hot domain labels: `n_source` rows of class 0 followed by `n_target`
/// rows of class 1.
pub fn domain_onehot(n_source: usize, n_target: usize) -> Array2<f64> {
    Array2::from_shape_fn((n_source + n_target, 2), |(i, j)| {
        let class = if i < n_source { SOURCE_CLASS } else { TARGET_CLASS };
        if j == class {
            1.0
        } else {
            0.0
        }
    })
}
