//! Feature ingestion, per-domain normalization, partitioning and the
//! synthetic covariate-shift task.

mod csv_io;
mod normalize;
mod synthetic;

pub use csv_io::{load_csv, write_csv, CsvData, RejectedRow};
pub use normalize::{apply_normalization, fit_normalization, quantile, NormalizationStats, STD_FLOOR};
pub use synthetic::{generate_shift_task, label_function, ShiftTask, SyntheticShiftSpec};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

use crate::{seeded_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainTag {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attribute {
    Arousal,
    Valence,
    Dominance,
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attribute::Arousal => "arousal",
            Attribute::Valence => "valence",
            Attribute::Dominance => "dominance",
        })
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arousal" => Ok(Attribute::Arousal),
            "valence" => Ok(Attribute::Valence),
            "dominance" => Ok(Attribute::Dominance),
            other => Err(Error::InvalidArgument(format!("unknown attribute `{other}`"))),
        }
    }
}

/// Row-per-sample feature matrix. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub values: Array2<f64>,
    pub domain: DomainTag,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, values: Array2<f64>, domain: DomainTag) -> Result<Self> {
        if ids.len() != values.nrows() {
            return Err(Error::InvalidShape(format!(
                "{} ids for {} rows",
                ids.len(),
                values.nrows()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature matrix contains non-finite values".into()));
        }
        Ok(FeatureMatrix { ids, values, domain })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            values: self.values.select(Axis(0), rows),
            domain: self.domain,
        }
    }
}

/// Features plus one attribute score per row, scores in [−3, 3].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub attribute: Attribute,
    pub scores: Array1<f64>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, attribute: Attribute, scores: Array1<f64>) -> Result<Self> {
        if scores.len() != features.len() {
            return Err(Error::InvalidShape(format!(
                "{} scores for {} rows",
                scores.len(),
                features.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(-3.0..=3.0).contains(*s)) {
            return Err(Error::InvalidInput(format!("score {bad} outside [-3, 3]")));
        }
        Ok(LabeledDataset {
            features,
            attribute,
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select(rows),
            attribute: self.attribute,
            scores: self.scores.select(Axis(0), rows),
        }
    }

    pub fn normalized(&self, stats: &NormalizationStats) -> Result<LabeledDataset> {
        Ok(LabeledDataset {
            features: apply_normalization(&self.features, stats)?,
            ..self.clone()
        })
    }
}

/// Disjoint, exhaustive row partition into `fractions.len()` parts, shuffled
/// with `seed`. Part sizes are floor(n·f), with the remainder going to the
/// last part.
pub fn split_indices(n: usize, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f >= 0.0 && *f <= 1.0)) {
        return Err(Error::InvalidArgument(format!("invalid split fractions {fractions:?}")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions sum to {total}, expected 1"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed, 0x5917));
    let mut parts = Vec::with_capacity(fractions.len());
    let mut start = 0;
    for (k, f) in fractions.iter().enumerate() {
        let end = if k + 1 == fractions.len() {
            n
        } else {
            (start + (f * n as f64).floor() as usize).min(n)
        };
        parts.push(order[start..end].to_vec());
        start = end;
    }
    Ok(parts)
}

pub fn split(dataset: &LabeledDataset, fractions: &[f64], seed: u64) -> Result<Vec<LabeledDataset>> {
    Ok(split_indices(dataset.len(), fractions, seed)?
        .iter()
        .map(|rows| dataset.select(rows))
        .collect())
}
