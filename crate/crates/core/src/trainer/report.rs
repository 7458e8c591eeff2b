//! Trial outputs: one CSV row per trial and a JSON aggregate.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{TrainConfig, TrialReport};
use crate::metrics::{mean, sample_std};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateEntry {
    pub split: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub failed: usize,
    pub entries: Vec<AggregateEntry>,
}

impl Aggregate {
    pub fn get(&self, split: &str, metric: &str) -> Option<&AggregateEntry> {
        self.entries.iter().find(|e| e.split == split && e.metric == metric)
    }
}

#[derive(Debug, Clone)]
pub struct TrialSet {
    pub reports: Vec<TrialReport>,
    pub aggregate: Aggregate,
}

impl TrialSet {
    pub fn successful(&self) -> impl Iterator<Item = &TrialReport> {
        self.reports.iter().filter(|r| r.failure.is_none())
    }

    /// Values of one metric on one split across successful trials.
    pub fn values(&self, split: &str, metric: &str) -> Vec<f64> {
        self.successful()
            .filter_map(|r| r.metric(split))
            .map(|m| match metric {
                "rmse" => m.rmse,
                "pr" => m.pr,
                _ => m.ccc,
            })
            .collect()
    }
}

/// Mean and sample standard deviation per (split, metric) over trials that
/// did not fail.
pub fn aggregate(reports: &[TrialReport]) -> Aggregate {
    let ok: Vec<&TrialReport> = reports.iter().filter(|r| r.failure.is_none()).collect();
    let mut entries = Vec::new();
    if let Some(first) = ok.first() {
        for (split, _) in &first.metrics {
            for metric in ["rmse", "pr", "ccc"] {
                let values: Vec<f64> = ok
                    .iter()
                    .filter_map(|r| r.metric(split))
                    .map(|m| match metric {
                        "rmse" => m.rmse,
                        "pr" => m.pr,
                        _ => m.ccc,
                    })
                    .collect();
                entries.push(AggregateEntry {
                    split: split.clone(),
                    metric: metric.to_string(),
                    mean: mean(&values),
                    std: sample_std(&values),
                });
            }
        }
    }
    Aggregate {
        trials: ok.len(),
        failed: reports.len() - ok.len(),
        entries,
    }
}

pub fn trials_csv(reports: &[TrialReport]) -> String {
    let splits: Vec<String> = reports
        .iter()
        .find(|r| r.failure.is_none())
        .map(|r| r.metrics.iter().map(|(s, _)| s.clone()).collect())
        .unwrap_or_default();
    let mut out = String::from("trial,seed,status");
    for s in &splits {
        let _ = write!(out, ",{s}_rmse,{s}_pr,{s}_ccc");
    }
    out.push_str(",final_domain_accuracy,final_lambda\n");
    for r in reports {
        let status = if r.failure.is_some() { "failed" } else { "ok" };
        let _ = write!(out, "{},{},{status}", r.trial, r.seed);
        for s in &splits {
            match r.metric(s) {
                Some(m) => {
                    let _ = write!(out, ",{},{},{}", m.rmse, m.pr, m.ccc);
                }
                None => out.push_str(",,,"),
            }
        }
        let acc = r.final_domain_accuracy().map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(out, ",{acc},{}", r.final_lambda);
    }
    out
}

pub fn write_trials_csv(path: &Path, reports: &[TrialReport]) -> Result<()> {
    std::fs::write(path, trials_csv(reports)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: String,
    #[serde(flatten)]
    aggregate: &'a Aggregate,
}

pub fn config_hash(config: &TrainConfig, extra: &str) -> String {
    let digest = Sha256::digest(format!("{}{extra}", config.canonical()).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_aggregate_json(path: &Path, aggregate: &Aggregate, config: &TrainConfig, extra: &str) -> Result<()> {
    let summary = Summary {
        config_hash: config_hash(config, extra),
        aggregate,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
