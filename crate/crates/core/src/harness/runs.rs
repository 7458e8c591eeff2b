use std::fmt;

use super::prepare::PreparedData;
use crate::model::{DannModel, NetworkSpec};
use crate::parallel::Execution;
use crate::trainer::{run_trials, train_baseline, train_dann, Evaluation, TrainConfig, TrialReport, TrialSet};
use crate::Result;

pub const SOURCE_TEST: &str = "source_test";
pub const TARGET_TEST: &str = "target_test";
pub const TARGET_DEV: &str = "target_dev";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    /// Within-target baseline: trained and tested on the target domain.
    Target,
    /// Source-only baseline.
    Src,
    Dann,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Target => "target",
            Approach::Src => "src",
            Approach::Dann => "dann",
        })
    }
}

/// Trains one model for one approach with `config.seed` as both the
/// initialization and the training seed.
pub fn train_once(
    data: &PreparedData,
    approach: Approach,
    spec: NetworkSpec,
    config: &TrainConfig,
) -> Result<(DannModel, TrialReport)> {
    let eval_splits = vec![
        (SOURCE_TEST.to_string(), &data.source_test),
        (TARGET_DEV.to_string(), &data.target_dev),
        (TARGET_TEST.to_string(), &data.target_test),
    ];
    match approach {
        Approach::Dann => {
            let model = DannModel::build(spec, config.seed)?;
            let eval = Evaluation {
                splits: eval_splits,
                dev: None,
                domain_probe: Some(&data.probe),
            };
            train_dann(model, &data.source_train, &data.target_pool, &eval, config)
        }
        Approach::Src => {
            let model = DannModel::build_baseline(spec, config.seed)?;
            let eval = Evaluation {
                splits: eval_splits,
                ..Default::default()
            };
            train_baseline(model, &data.source_train, &data.source_dev, &eval, config)
        }
        Approach::Target => {
            let model = DannModel::build_baseline(spec, config.seed)?;
            let eval = Evaluation {
                splits: eval_splits,
                ..Default::default()
            };
            train_baseline(model, &data.target_train, &data.target_dev, &eval, config)
        }
    }
}

pub fn run_approach(
    data: &PreparedData,
    approach: Approach,
    spec: NetworkSpec,
    config: &TrainConfig,
    execution: Execution,
) -> Result<TrialSet> {
    run_trials(config, execution, |_, trial_config| {
        train_once(data, approach, spec, trial_config).map(|(_, report)| report)
    })
}
