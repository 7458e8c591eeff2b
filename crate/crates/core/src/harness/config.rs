//! Flat `key = value` experiment configs with dotted section keys.
//!
//! ```text
//! # comment
//! kind = compare
//! out = results/compare
//! attribute = arousal
//! data.kind = synthetic
//! data.synthetic.rotation_deg = 30
//! net.shared_layers = 1
//! train.epochs = 100
//! ```

use std::path::{Path, PathBuf};

use crate::data::{Attribute, SyntheticShiftSpec};
use crate::model::DEFAULT_HIDDEN_WIDTH;
use crate::parallel::Execution;
use crate::trainer::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sweep,
    Compare,
    Visualize,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep" => Ok(ExperimentKind::Sweep),
            "compare" => Ok(ExperimentKind::Compare),
            "visualize" => Ok(ExperimentKind::Visualize),
            other => Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticShiftSpec),
    Csv {
        source: PathBuf,
        /// Labeled target rows (evaluation and the within-target baseline).
        target: PathBuf,
        /// Unlabeled target rows; defaults to the target train+dev features.
        target_pool: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub name: String,
    pub data: DataSource,
    pub attribute: Attribute,
    /// Train / dev / test fractions applied to each labeled domain.
    pub split: [f64; 3],
    pub split_seed: u64,
    pub shared_layers: usize,
    pub sweep_layers: Vec<usize>,
    pub hidden_width: usize,
    pub train: TrainConfig,
    /// Epochs for the frozen-representation domain probe.
    pub probe_epochs: usize,
    pub out: PathBuf,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            name: "synthetic".into(),
            data: DataSource::Synthetic(SyntheticShiftSpec::default()),
            attribute: Attribute::Arousal,
            split: [0.7, 0.15, 0.15],
            split_seed: 0,
            shared_layers: 1,
            sweep_layers: vec![1, 2, 3, 4],
            hidden_width: DEFAULT_HIDDEN_WIDTH,
            train: TrainConfig::default(),
            probe_epochs: 30,
            out: PathBuf::from("out"),
            execution: Execution::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative data paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let kind = pairs
            .iter()
            .find(|(_, k, _)| k == "kind")
            .ok_or_else(|| Error::Config("missing `kind`".into()))?
            .2
            .parse()?;
        let mut cfg = ExperimentConfig::new(kind);
        let mut synth = SyntheticShiftSpec::default();
        let mut translation_norm: Option<f64> = None;
        let mut data_kind = "synthetic".to_string();
        let (mut source, mut target, mut pool) = (None, None, None);

        for (line, key, value) in &pairs {
            let bad = |what: &str| Error::Config(format!("line {line}: bad {what} `{value}` for `{key}`"));
            let num = || value.parse::<f64>().map_err(|_| bad("number"));
            let int = || value.parse::<usize>().map_err(|_| bad("integer"));
            let uint = || value.parse::<u64>().map_err(|_| bad("integer"));
            let path = || base.join(value);
            match key.as_str() {
                "kind" => {}
                "name" => cfg.name = value.clone(),
                "out" => cfg.out = PathBuf::from(value),
                "seed" | "train.seed" => cfg.train.seed = uint()?,
                "attribute" => cfg.attribute = value.parse()?,
                "data.kind" => data_kind = value.clone(),
                "data.source" => source = Some(path()),
                "data.target" => target = Some(path()),
                "data.target_pool" => pool = Some(path()),
                "data.split" => {
                    let parts: Vec<f64> = value
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("fraction list"))?;
                    cfg.split = parts.try_into().map_err(|_| bad("three-way split"))?;
                }
                "data.split_seed" => cfg.split_seed = uint()?,
                "data.synthetic.n_source" => synth.n_source = int()?,
                "data.synthetic.n_target" => synth.n_target = int()?,
                "data.synthetic.latent_dim" => synth.latent_dim = int()?,
                "data.synthetic.feature_dim" => synth.feature_dim = int()?,
                "data.synthetic.rotation_deg" => synth.rotation_angle = num()?,
                "data.synthetic.translation_norm" => translation_norm = Some(num()?),
                "data.synthetic.noise_std" => synth.noise_std = num()?,
                "data.synthetic.seed" => synth.seed = uint()?,
                "net.shared_layers" => cfg.shared_layers = int()?,
                "net.sweep" => {
                    cfg.sweep_layers = value
                        .split(',')
                        .map(|p| p.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("layer list"))?
                }
                "net.hidden_width" => cfg.hidden_width = int()?,
                "train.epochs" => cfg.train.epochs = int()?,
                "train.batch_size" => cfg.train.batch_size = int()?,
                "train.learning_rate" => cfg.train.learning_rate = num()?,
                "train.dropout_input" => cfg.train.dropout_input = num()?,
                "train.dropout_hidden" => cfg.train.dropout_hidden = num()?,
                "train.max_norm" => cfg.train.max_norm = num()?,
                "train.clip_norm" => cfg.train.clip_norm = num()?,
                "train.lambda_warmup_epochs" => cfg.train.lambda_warmup_epochs = int()?,
                "train.lambda_final" => cfg.train.lambda_final = num()?,
                "train.trials" => cfg.train.trials = int()?,
                "probe.epochs" => cfg.probe_epochs = int()?,
                "run.parallel" => {
                    cfg.execution = match value.as_str() {
                        "true" => Execution::Parallel,
                        "false" => Execution::Sequential,
                        _ => return Err(bad("boolean")),
                    }
                }
                other => return Err(Error::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        synth.attribute = cfg.attribute;
        if synth.translation.len() != synth.feature_dim || translation_norm.is_some() {
            synth = synth.with_translation_norm(translation_norm.unwrap_or(2.0));
        }
        cfg.data = match data_kind.as_str() {
            "synthetic" => DataSource::Synthetic(synth),
            "csv" => DataSource::Csv {
                source: source.ok_or_else(|| Error::Config("csv data needs `data.source`".into()))?,
                target: target.ok_or_else(|| Error::Config("csv data needs `data.target`".into()))?,
                target_pool: pool,
            },
            other => return Err(Error::Config(format!("unknown data.kind `{other}`"))),
        };
        if let (DataSource::Csv { source, .. }, false) = (&cfg.data, pairs.iter().any(|(_, k, _)| k == "name")) {
            cfg.name = source
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "source".into());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let DataSource::Csv {
            source,
            target,
            target_pool,
        } = &self.data
        {
            for p in [Some(source), Some(target), target_pool.as_ref()].into_iter().flatten() {
                if !p.exists() {
                    return Err(Error::Config(format!("data file {} does not exist", p.display())));
                }
            }
        }
        if let DataSource::Synthetic(spec) = &self.data {
            spec.validate()?;
        }
        if self.kind == ExperimentKind::Sweep
            && (self.sweep_layers.is_empty() || self.sweep_layers.iter().any(|l| !(1..=4).contains(l)))
        {
            return Err(Error::Config(format!(
                "sweep layers must be a non-empty subset of 1..=4, got {:?}",
                self.sweep_layers
            )));
        }
        if !(1..=4).contains(&self.shared_layers) {
            return Err(Error::Config("net.shared_layers must be 1..=4".into()));
        }
        if (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.split.iter().any(|f| *f <= 0.0) {
            return Err(Error::Config(format!("data.split must be three positive fractions summing to 1, got {:?}", self.split)));
        }
        self.train.validate()?;
        if self.train.trials == 0 {
            return Err(Error::Config("train.trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Stable rendering of everything that determines the results.
    pub fn fingerprint(&self) -> String {
        format!(
            "{:?}|{}|{:?}|{:?}|{}|{}|{:?}|{}|{}",
            self.kind,
            self.name,
            self.data,
            self.split,
            self.split_seed,
            self.shared_layers,
            self.sweep_layers,
            self.hidden_width,
            self.probe_epochs
        )
    }
}
