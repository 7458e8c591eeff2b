use ndarray::{concatenate, Axis};

use super::config::{DataSource, ExperimentConfig};
use crate::data::{
    apply_normalization, fit_normalization, generate_shift_task, load_csv, split, DomainTag, FeatureMatrix,
    LabeledDataset,
};
use crate::trainer::DomainProbeSet;
use crate::{Error, Result};

/// Normalized, partitioned data for one source → target experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub name: String,
    pub source_train: LabeledDataset,
    pub source_dev: LabeledDataset,
    pub source_test: LabeledDataset,
    pub target_train: LabeledDataset,
    pub target_dev: LabeledDataset,
    pub target_test: LabeledDataset,
    pub target_pool: FeatureMatrix,
    /// Balanced held-out rows: source test ∪ target test.
    pub probe: DomainProbeSet,
}

impl PreparedData {
    pub fn input_dim(&self) -> usize {
        self.source_train.features.dim()
    }

    /// Normalizes each domain with its own statistics, then splits both
    /// labeled sets into train/dev/test.
    pub fn from_raw(
        name: &str,
        source: &LabeledDataset,
        target: &LabeledDataset,
        target_pool: Option<&FeatureMatrix>,
        fractions: [f64; 3],
        split_seed: u64,
    ) -> Result<Self> {
        if source.features.dim() != target.features.dim() {
            return Err(Error::InvalidShape("source and target feature dimensions differ".into()));
        }
        let source_stats = fit_normalization(&source.features)?;
        let target_rows = match target_pool {
            Some(pool) => {
                let values = concatenate(Axis(0), &[target.features.values.view(), pool.values.view()])
                    .map_err(|e| Error::InvalidShape(e.to_string()))?;
                let ids = target.features.ids.iter().chain(&pool.ids).cloned().collect();
                FeatureMatrix::new(ids, values, DomainTag::Target)?
            }
            None => target.features.clone(),
        };
        let target_stats = fit_normalization(&target_rows)?;

        let source = source.normalized(&source_stats)?;
        let target = target.normalized(&target_stats)?;
        let mut s = split(&source, &fractions, split_seed)?.into_iter();
        let mut t = split(&target, &fractions, split_seed.wrapping_add(1))?.into_iter();
        let (source_train, source_dev, source_test) = (s.next().unwrap(), s.next().unwrap(), s.next().unwrap());
        let (target_train, target_dev, target_test) = (t.next().unwrap(), t.next().unwrap(), t.next().unwrap());

        let target_pool = match target_pool {
            Some(pool) => apply_normalization(pool, &target_stats)?,
            None => {
                let values = concatenate(
                    Axis(0),
                    &[target_train.features.values.view(), target_dev.features.values.view()],
                )
                .map_err(|e| Error::InvalidShape(e.to_string()))?;
                let ids = target_train.features.ids.iter().chain(&target_dev.features.ids).cloned().collect();
                FeatureMatrix::new(ids, values, DomainTag::Target)?
            }
        };
        let probe = DomainProbeSet::balanced(&source_test.features, &target_test.features)?;
        Ok(PreparedData {
            name: name.to_string(),
            source_train,
            source_dev,
            source_test,
            target_train,
            target_dev,
            target_test,
            target_pool,
            probe,
        })
    }

    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        match &config.data {
            DataSource::Synthetic(spec) => {
                let task = generate_shift_task(spec)?;
                Self::from_raw(
                    &config.name,
                    &task.source,
                    &task.target_labeled,
                    Some(&task.target_pool),
                    config.split,
                    config.split_seed,
                )
            }
            DataSource::Csv {
                source,
                target,
                target_pool,
            } => {
                let labeled = |path: &std::path::Path, domain| -> Result<LabeledDataset> {
                    let data = load_csv(path, domain)?;
                    let labels = data.labels.ok_or_else(|| {
                        Error::Config(format!("{} has no `label` column", path.display()))
                    })?;
                    LabeledDataset::new(data.features, config.attribute, labels)
                };
                let src = labeled(source, DomainTag::Source)?;
                let tgt = labeled(target, DomainTag::Target)?;
                let pool = match target_pool {
                    Some(p) => Some(load_csv(p, DomainTag::Target)?.features),
                    None => None,
                };
                Self::from_raw(&config.name, &src, &tgt, pool.as_ref(), config.split, config.split_seed)
            }
        }
    }
}
