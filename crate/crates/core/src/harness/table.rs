//! Table I / Table II shaped outputs.

use std::fmt::Write as _;

use super::runs::{Approach, TARGET_DEV, TARGET_TEST};
use crate::metrics::{mean, one_tailed_ttest, sample_std};
use crate::model::Variant;
use crate::trainer::TrialSet;
use crate::Result;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        MeanStd {
            mean: mean(values),
            std: sample_std(values),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCells {
    pub rmse: MeanStd,
    pub pr: MeanStd,
    pub ccc: MeanStd,
}

impl MetricCells {
    pub fn from_trials(set: &TrialSet, split: &str) -> Self {
        MetricCells {
            rmse: MeanStd::of(&set.values(split, "rmse")),
            pr: MeanStd::of(&set.values(split, "pr")),
            ccc: MeanStd::of(&set.values(split, "ccc")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub source: String,
    pub approach: Approach,
    pub structure: Variant,
    pub trials: usize,
    pub failed: usize,
    /// Target-test metrics.
    pub cells: MetricCells,
    /// DANN rows only: one-tailed p-value of DANN CCC > src CCC. Absent when
    /// either side has fewer than two successful trials.
    pub p_value: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Builds one row per `(approach, structure, trials)` entry. DANN rows are
    /// tested against the src row of the same structure.
    pub fn build(source: &str, sets: &[(Approach, Variant, &TrialSet)]) -> Result<Self> {
        let mut rows = Vec::with_capacity(sets.len());
        for &(approach, structure, set) in sets {
            let mut p_value = None;
            if approach == Approach::Dann {
                if let Some((_, _, src)) = sets.iter().find(|(a, v, _)| *a == Approach::Src && *v == structure) {
                    let dann = set.values(TARGET_TEST, "ccc");
                    let base = src.values(TARGET_TEST, "ccc");
                    if dann.len() >= 2 && base.len() >= 2 {
                        p_value = Some(one_tailed_ttest(&dann, &base)?);
                    }
                }
            }
            rows.push(ComparisonRow {
                source: source.to_string(),
                approach,
                structure,
                trials: set.reports.len(),
                failed: set.aggregate.failed,
                cells: MetricCells::from_trials(set, TARGET_TEST),
                p_value,
                significant: p_value.is_some_and(|p| p < SIGNIFICANCE_LEVEL),
            });
        }
        Ok(ComparisonTable { rows })
    }

    pub fn get(&self, approach: Approach, structure: Variant) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.approach == approach && r.structure == structure)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "source,approach,structure,trials,failed,rmse_mean,rmse_std,pr_mean,pr_std,ccc_mean,ccc_std,p_value,significant\n",
        );
        for r in &self.rows {
            let c = &r.cells;
            let p = r.p_value.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{p},{}",
                r.source,
                r.approach,
                r.structure,
                r.trials,
                r.failed,
                c.rmse.mean,
                c.rmse.std,
                c.pr.mean,
                c.pr.std,
                c.ccc.mean,
                c.ccc.std,
                r.significant
            );
        }
        out
    }

    /// Plain-text layout: one block per structure, one line per approach.
    /// Significant DANN rows are marked with `*`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let mut structures: Vec<Variant> = Vec::new();
        for r in &self.rows {
            if !structures.contains(&r.structure) {
                structures.push(r.structure);
            }
        }
        for s in structures {
            let _ = writeln!(out, "structure: {s}");
            let _ = writeln!(
                out,
                "  {:<8} {:>17} {:>17} {:>17}  {}",
                "approach", "RMSE", "PR", "CCC", "p"
            );
            for r in self.rows.iter().filter(|r| r.structure == s) {
                let cell = |m: MeanStd| format!("{:.4} ± {:.4}", m.mean, m.std);
                let p = match r.p_value {
                    Some(p) => format!("{p:.4}{}", if r.significant { " *" } else { "" }),
                    None => "-".into(),
                };
                let _ = writeln!(
                    out,
                    "  {:<8} {:>17} {:>17} {:>17}  {p}",
                    r.approach.to_string(),
                    cell(r.cells.rmse),
                    cell(r.cells.pr),
                    cell(r.cells.ccc)
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub shared_layers: usize,
    pub trials: usize,
    pub failed: usize,
    /// Target-dev metrics.
    pub cells: MetricCells,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub source: String,
    pub attribute: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn build(source: &str, attribute: &str, sets: &[(usize, &TrialSet)]) -> Self {
        let rows = sets
            .iter()
            .map(|&(layers, set)| SweepRow {
                shared_layers: layers,
                trials: set.reports.len(),
                failed: set.aggregate.failed,
                cells: MetricCells::from_trials(set, TARGET_DEV),
            })
            .collect();
        SweepTable {
            source: source.to_string(),
            attribute: attribute.to_string(),
            rows,
        }
    }

    /// Layer count with the highest mean dev CCC; the smaller count wins ties.
    pub fn best_layers(&self) -> Option<usize> {
        self.rows
            .iter()
            .filter(|r| r.cells.ccc.mean.is_finite())
            .fold(None, |best: Option<&SweepRow>, r| match best {
                Some(b) if b.cells.ccc.mean >= r.cells.ccc.mean => Some(b),
                _ => Some(r),
            })
            .map(|r| r.shared_layers)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "source,attribute,shared_layers,trials,failed,status,rmse_mean,rmse_std,pr_mean,pr_std,ccc_mean,ccc_std,selected\n",
        );
        let best = self.best_layers();
        for r in &self.rows {
            let c = &r.cells;
            let status = if r.failed == r.trials { "failed" } else { "ok" };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{status},{},{},{},{},{},{},{}",
                self.source,
                self.attribute,
                r.shared_layers,
                r.trials,
                r.failed,
                c.rmse.mean,
                c.rmse.std,
                c.pr.mean,
                c.pr.std,
                c.ccc.mean,
                c.ccc.std,
                best == Some(r.shared_layers)
            );
        }
        out
    }
}
