//! Training loops.
//!
//! Every batch of a DANN epoch holds `batch_size / 2` source rows and the same
//! number of unlabeled target rows; the source-only baseline runs the very
//! same loop with the target half and domain branch removed. Two generator
//! streams derive from the trial seed: one drives source shuffling and the
//! source-row dropout masks, the other drives everything on the target side.
//! Detaching the domain branch (λ = 0) therefore leaves the source-side
//! trajectory untouched.

mod report;
mod schedule;

pub use report::{
    aggregate, write_aggregate_json, write_trials_csv, Aggregate, AggregateEntry, TrialSet,
};
pub use schedule::LambdaSchedule;

use std::time::{Duration, Instant};

use ndarray::{Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use crate::data::{DomainTag, FeatureMatrix, LabeledDataset};
use crate::metrics::{domain_accuracy, MetricTriple};
use crate::model::{domain_onehot, DannModel, LossWeights, TARGET_CLASS};
use crate::nn::{Adam, AdamConfig};
use crate::parallel::{map_indexed, Execution};
use crate::{seeded_rng, Error, Result, Rng};

const TASK_STREAM: u64 = 10;
const DOMAIN_STREAM: u64 = 11;
/// Batches with fewer rows than this (both halves together) are dropped.
const MIN_BATCH_ROWS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_input: f64,
    pub dropout_hidden: f64,
    pub max_norm: f64,
    pub clip_norm: f64,
    pub lambda_warmup_epochs: usize,
    pub lambda_final: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 5e-4,
            dropout_input: 0.2,
            dropout_hidden: 0.5,
            max_norm: 4.0,
            clip_norm: 10.0,
            lambda_warmup_epochs: 10,
            lambda_final: 1.0,
            trials: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.batch_size < MIN_BATCH_ROWS || self.batch_size % 2 != 0 {
            return fail(format!("batch_size must be even and ≥ {MIN_BATCH_ROWS}, got {}", self.batch_size));
        }
        if !(self.learning_rate > 0.0) || !(self.max_norm > 0.0) || !(self.clip_norm > 0.0) {
            return fail("learning rate, max-norm and clip-norm must be positive".into());
        }
        for rate in [self.dropout_input, self.dropout_hidden] {
            if !(0.0..1.0).contains(&rate) {
                return fail(format!("dropout rate {rate} outside [0, 1)"));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<LambdaSchedule> {
        LambdaSchedule::new(self.lambda_warmup_epochs, self.epochs, self.lambda_final)
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            max_norm: Some(self.max_norm),
            clip_norm: Some(self.clip_norm),
            ..AdamConfig::default()
        }
    }

    /// Stable `key=value` rendering, one per line.
    pub fn canonical(&self) -> String {
        format!(
            "epochs={}\nbatch_size={}\nlearning_rate={}\ndropout_input={}\ndropout_hidden={}\nmax_norm={}\nclip_norm={}\nlambda_warmup_epochs={}\nlambda_final={}\ntrials={}\nseed={}\n",
            self.epochs,
            self.batch_size,
            self.learning_rate,
            self.dropout_input,
            self.dropout_hidden,
            self.max_norm,
            self.clip_norm,
            self.lambda_warmup_epochs,
            self.lambda_final,
            self.trials,
            self.seed
        )
    }
}

/// Held-out rows with equal source and target counts.
#[derive(Debug, Clone)]
pub struct DomainProbeSet {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl DomainProbeSet {
    pub fn balanced(source: &FeatureMatrix, target: &FeatureMatrix) -> Result<Self> {
        let n = source.len().min(target.len());
        if n == 0 {
            return Err(Error::InvalidInput("probe set needs rows from both domains".into()));
        }
        let rows: Vec<usize> = (0..n).collect();
        let features = ndarray::concatenate(
            Axis(0),
            &[
                source.values.select(Axis(0), &rows).view(),
                target.values.select(Axis(0), &rows).view(),
            ],
        )
        .map_err(|e| Error::InvalidShape(e.to_string()))?;
        let labels = domain_onehot(n, n)
            .rows()
            .into_iter()
            .map(|r| usize::from(r[TARGET_CLASS] == 1.0))
            .collect();
        Ok(DomainProbeSet { features, labels })
    }

    pub fn is_balanced(&self) -> bool {
        let targets = self.labels.iter().filter(|&&l| l == TARGET_CLASS).count();
        !self.labels.is_empty() && 2 * targets == self.labels.len()
    }
}

/// What a training run is measured on besides its own loss.
#[derive(Debug, Clone, Default)]
pub struct Evaluation<'a> {
    /// Named labeled splits scored after the final epoch.
    pub splits: Vec<(String, &'a LabeledDataset)>,
    /// Scored after every epoch (baseline model selection).
    pub dev: Option<&'a LabeledDataset>,
    /// Domain accuracy measured after every epoch (DANN only).
    pub domain_probe: Option<&'a DomainProbeSet>,
}

/// Rows a training run read for gradient steps and model selection, by domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowTally {
    pub source: usize,
    pub target: usize,
}

impl RowTally {
    fn add(&mut self, domain: DomainTag, rows: usize) {
        match domain {
            DomainTag::Source => self.source += rows,
            DomainTag::Target => self.target += rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub metrics: Vec<(String, MetricTriple)>,
    pub domain_accuracy: Vec<f64>,
    pub dev_trace: Vec<MetricTriple>,
    pub lambda_trace: Vec<f64>,
    pub final_lambda: f64,
    pub final_task_loss: f64,
    pub rows_read: RowTally,
    pub wall_time: Duration,
    pub failure: Option<String>,
}

impl TrialReport {
    fn new(seed: u64) -> Self {
        TrialReport {
            trial: 0,
            seed,
            metrics: Vec::new(),
            domain_accuracy: Vec::new(),
            dev_trace: Vec::new(),
            lambda_trace: Vec::new(),
            final_lambda: 0.0,
            final_task_loss: f64::NAN,
            rows_read: RowTally::default(),
            wall_time: Duration::ZERO,
            failure: None,
        }
    }

    pub fn failed(trial: usize, seed: u64, reason: String) -> Self {
        TrialReport {
            trial,
            failure: Some(reason),
            ..Self::new(seed)
        }
    }

    pub fn metric(&self, split: &str) -> Option<MetricTriple> {
        self.metrics.iter().find(|(s, _)| s == split).map(|(_, m)| *m)
    }

    pub fn final_domain_accuracy(&self) -> Option<f64> {
        self.domain_accuracy.last().copied()
    }

    /// Report fields compared for reproducibility (everything except wall time).
    pub fn same_outcome(&self, other: &TrialReport) -> bool {
        TrialReport {
            wall_time: Duration::ZERO,
            ..self.clone()
        } == TrialReport {
            wall_time: Duration::ZERO,
            ..other.clone()
        }
    }
}

/// Draws `n_source` pool rows uniformly: distinct rows when the pool is large
/// enough, otherwise with replacement.
pub fn sample_unlabeled(pool: &FeatureMatrix, n_source: usize, rng: &mut Rng) -> Result<FeatureMatrix> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("unlabeled pool is empty".into()));
    }
    let rows: Vec<usize> = if pool.len() >= n_source {
        index::sample(rng, pool.len(), n_source).into_vec()
    } else {
        (0..n_source).map(|_| rng.random_range(0..pool.len())).collect()
    };
    Ok(pool.select(&rows))
}

pub fn evaluate(model: &DannModel, data: &LabeledDataset) -> Result<MetricTriple> {
    let pred = model.predict_task(&data.features.values)?;
    MetricTriple::evaluate(&pred, &data.scores)
}

pub fn probe_accuracy(model: &DannModel, probe: &DomainProbeSet) -> Result<f64> {
    domain_accuracy(&model.predict_domain(&probe.features)?, &probe.labels)
}

/// DANN training: task loss on the source half, domain loss on both halves,
/// one Adam step per batch on all parameters.
pub fn train_dann(
    model: DannModel,
    source: &LabeledDataset,
    target_pool: &FeatureMatrix,
    eval: &Evaluation<'_>,
    config: &TrainConfig,
) -> Result<(DannModel, TrialReport)> {
    if !model.has_domain_branch() {
        return Err(Error::InvalidState("DANN training needs a domain branch".into()));
    }
    if target_pool.is_empty() {
        return Err(Error::InvalidInput("target pool is empty".into()));
    }
    let schedule = config.schedule()?;
    train_loop(model, source, Some(target_pool), Some(schedule), eval, config)
}

/// Source-only (or within-target) training: the DANN loop minus the domain
/// branch. Dev metrics are recorded after every epoch.
pub fn train_baseline(
    model: DannModel,
    train: &LabeledDataset,
    dev: &LabeledDataset,
    eval: &Evaluation<'_>,
    config: &TrainConfig,
) -> Result<(DannModel, TrialReport)> {
    if model.has_domain_branch() {
        return Err(Error::InvalidState("baseline training takes a model without a domain branch".into()));
    }
    let eval = Evaluation {
        dev: Some(dev),
        domain_probe: None,
        splits: eval.splits.clone(),
    };
    train_loop(model, train, None, None, &eval, config)
}

fn train_loop(
    mut model: DannModel,
    source: &LabeledDataset,
    target_pool: Option<&FeatureMatrix>,
    schedule: Option<LambdaSchedule>,
    eval: &Evaluation<'_>,
    config: &TrainConfig,
) -> Result<(DannModel, TrialReport)> {
    config.validate()?;
    if source.is_empty() {
        return Err(Error::InvalidInput("source set is empty".into()));
    }
    let start = Instant::now();
    let mut report = TrialReport::new(config.seed);
    model.set_dropout(config.dropout_input, config.dropout_hidden)?;

    let mut task_rng = seeded_rng(config.seed, TASK_STREAM);
    let mut domain_rng = seeded_rng(config.seed, DOMAIN_STREAM);
    let n = source.len();
    let unlabeled = match target_pool {
        Some(pool) => Some(sample_unlabeled(pool, n, &mut domain_rng)?),
        None => None,
    };
    let half = config.batch_size / 2;
    let min_rows = if unlabeled.is_some() { MIN_BATCH_ROWS / 2 } else { 2 };
    let mut adam = Adam::new(config.adam());
    let mut src_order: Vec<usize> = (0..n).collect();
    let mut tgt_order: Vec<usize> = (0..n).collect();

    for epoch in 1..=config.epochs {
        let lambda = match schedule {
            Some(s) => s.lambda_at(epoch)?,
            None => 0.0,
        };
        model.gate.set_lambda(lambda)?;
        src_order.shuffle(&mut task_rng);
        if unlabeled.is_some() {
            tgt_order.shuffle(&mut domain_rng);
        }
        for start_row in (0..n).step_by(half) {
            let rows = half.min(n - start_row);
            if rows < min_rows {
                continue;
            }
            let src_rows = &src_order[start_row..start_row + rows];
            let xs = source.features.values.select(Axis(0), src_rows);
            let ys = source.scores.select(Axis(0), src_rows);
            report.rows_read.add(source.features.domain, rows);
            let xt = unlabeled.as_ref().map(|u| {
                report.rows_read.add(u.domain, rows);
                u.values.select(Axis(0), &tgt_order[start_row..start_row + rows])
            });
            let losses = model.forward_backward(
                &xs,
                &ys,
                xt.as_ref(),
                LossWeights::default(),
                &mut task_rng,
                &mut domain_rng,
            )?;
            report.final_task_loss = losses.task;
            let mut groups = model.param_groups_mut();
            let mut slices: Vec<&mut [&mut crate::nn::Param]> = groups.iter_mut().map(|g| g.as_mut_slice()).collect();
            adam.step_groups(&mut slices)?;
        }
        model.clear_caches();
        report.lambda_trace.push(lambda);
        if let (Some(probe), true) = (eval.domain_probe, model.has_domain_branch()) {
            report.domain_accuracy.push(probe_accuracy(&model, probe)?);
        }
        if let Some(dev) = eval.dev {
            report.rows_read.add(dev.features.domain, dev.len());
            report.dev_trace.push(evaluate(&model, dev)?);
        }
    }

    report.final_lambda = model.gate.lambda();
    for (name, data) in &eval.splits {
        report.metrics.push((name.clone(), evaluate(&model, data)?));
    }
    report.wall_time = start.elapsed();
    Ok((model, report))
}

/// Runs `config.trials` independent trials; trial `t` trains with seed
/// `config.seed + t`. Numeric failures are recorded and excluded from the
/// aggregate; any other error aborts the whole run.
pub fn run_trials<F>(config: &TrainConfig, execution: Execution, experiment: F) -> Result<TrialSet>
where
    F: Fn(usize, &TrainConfig) -> Result<TrialReport> + Sync + Send,
{
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let results = map_indexed(config.trials, execution, |t| {
        let trial_config = TrainConfig {
            seed: config.seed + t as u64,
            ..config.clone()
        };
        experiment(t, &trial_config).map(|mut r| {
            r.trial = t;
            r
        })
    });
    let mut reports = Vec::with_capacity(results.len());
    for (t, result) in results.into_iter().enumerate() {
        match result {
            Ok(r) => reports.push(r),
            Err(Error::Numeric(msg)) => {
                reports.push(TrialReport::failed(t, config.seed + t as u64, msg));
            }
            Err(e) => return Err(e),
        }
    }
    let aggregate = aggregate(&reports);
    Ok(TrialSet { reports, aggregate })
}
