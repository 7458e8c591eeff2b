//! Domain-confusion measurements.

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;

use crate::data::FeatureMatrix;
use crate::metrics::domain_accuracy;
use crate::model::{domain_onehot, DannModel, DEFAULT_DROPOUT_HIDDEN};
use crate::nn::{crossentropy_loss, softmax, Adam, AdamConfig, Dense, ForwardCtx, Layer, Mode, Stack};
use crate::trainer::{probe_accuracy, DomainProbeSet};
use crate::{seeded_rng, Error, Result};

const PROBE_INIT_STREAM: u64 = 0x9b0e;
const PROBE_TRAIN_STREAM: u64 = 0x9b0f;

/// Held-out domain accuracy of the model's own domain head.
pub fn domain_confusion_probe(model: &DannModel, eval: &DomainProbeSet) -> Result<f64> {
    if !eval.is_balanced() {
        return Err(Error::InvalidInput(
            "probe set must hold equal source and target counts".into(),
        ));
    }
    probe_accuracy(model, eval)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenProbeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FrozenProbeConfig {
    fn default() -> Self {
        FrozenProbeConfig {
            epochs: 30,
            batch_size: 256,
            learning_rate: 5e-4,
            seed: 0,
        }
    }
}

/// Trains a fresh domain classifier (same shape as a DANN domain head) on the
/// frozen shared representation of `model` and reports its accuracy on `eval`.
///
/// Training rows are `source` and `target` truncated to the same length.
pub fn frozen_representation_probe(
    model: &DannModel,
    source: &FeatureMatrix,
    target: &FeatureMatrix,
    eval: &DomainProbeSet,
    config: FrozenProbeConfig,
) -> Result<f64> {
    if !eval.is_balanced() {
        return Err(Error::InvalidInput(
            "probe set must hold equal source and target counts".into(),
        ));
    }
    if config.epochs == 0 || config.batch_size < 4 || config.batch_size % 2 != 0 {
        return Err(Error::Config(
            "probe needs epochs ≥ 1 and an even batch size ≥ 4".into(),
        ));
    }
    let n = source.len().min(target.len());
    if n < 2 {
        return Err(Error::InvalidInput("probe training needs rows from both domains".into()));
    }
    let spec = model.spec();
    let rows: Vec<usize> = (0..n).collect();
    let hs = model.represent(&source.values.select(Axis(0), &rows))?;
    let ht = model.represent(&target.values.select(Axis(0), &rows))?;

    let mut init = seeded_rng(config.seed, PROBE_INIT_STREAM);
    let mut head = Stack::new();
    for _ in 1..spec.domain_layers {
        head.push_hidden(
            spec.hidden_width,
            spec.hidden_width,
            DEFAULT_DROPOUT_HIDDEN,
            spec.bn_momentum,
            spec.bn_epsilon,
            &mut init,
        )?;
    }
    head.push(Layer::Dense(Dense::new(spec.hidden_width, 2, &mut init)));

    let mut rng = seeded_rng(config.seed, PROBE_TRAIN_STREAM);
    let mut adam = Adam::new(AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    });
    let half = config.batch_size / 2;
    let mut src_order = rows.clone();
    let mut tgt_order = rows;
    for _ in 0..config.epochs {
        src_order.shuffle(&mut rng);
        tgt_order.shuffle(&mut rng);
        for start in (0..n).step_by(half) {
            let k = half.min(n - start);
            if k < 2 {
                continue;
            }
            let x = concatenate(
                Axis(0),
                &[
                    hs.select(Axis(0), &src_order[start..start + k]).view(),
                    ht.select(Axis(0), &tgt_order[start..start + k]).view(),
                ],
            )
            .map_err(|e| Error::InvalidShape(e.to_string()))?;
            head.zero_grad();
            let mut ctx = ForwardCtx::single(2 * k, &mut rng);
            let logits = head.forward(&x, Mode::Train, &mut ctx)?;
            let (_, grad) = crossentropy_loss(&logits, &domain_onehot(k, k))?;
            head.backward(&grad)?;
            adam.step(&mut head.params_mut())?;
        }
        head.clear_caches();
    }
    let probs: Array2<f64> = softmax(&head.infer(&model.represent(&eval.features)?)?);
    domain_accuracy(&probs, &eval.labels)
}
