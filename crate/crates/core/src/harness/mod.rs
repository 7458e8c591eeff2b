//! Experiment runner: shared-layer sweep, three-approach comparison and
//! representation visualization. Every output lands under `config.out`.

mod config;
mod prepare;
mod probe;
mod projection;
mod runs;
mod table;

pub use config::{DataSource, ExperimentConfig, ExperimentKind};
pub use prepare::PreparedData;
pub use probe::{domain_confusion_probe, frozen_representation_probe, FrozenProbeConfig};
pub use projection::{dump_layer, dump_representations, nearest_centroid_accuracy, pca_2d, Projection};
pub use runs::{run_approach, train_once, Approach, SOURCE_TEST, TARGET_DEV, TARGET_TEST};
pub use table::{ComparisonRow, ComparisonTable, MeanStd, MetricCells, SweepRow, SweepTable, SIGNIFICANCE_LEVEL};

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Axis;

use crate::model::{NetworkSpec, Variant};
use crate::trainer::{write_aggregate_json, write_trials_csv, TrialSet};
use crate::{Error, Result};

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_out(config: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))
}

fn write_trials(config: &ExperimentConfig, stem: &str, set: &TrialSet) -> Result<()> {
    write_trials_csv(&config.out.join(format!("trials_{stem}.csv")), &set.reports)?;
    write_aggregate_json(
        &config.out.join(format!("summary_{stem}.json")),
        &set.aggregate,
        &config.train,
        &format!("{}|{stem}", config.fingerprint()),
    )
}

/// DANN at each shared-layer count; writes `sweep.csv`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    config.validate()?;
    let data = PreparedData::load(config)?;
    prepare_out(config)?;
    let mut sets = Vec::with_capacity(config.sweep_layers.len());
    for &layers in &config.sweep_layers {
        let spec = NetworkSpec::deep(data.input_dim(), layers).with_width(config.hidden_width);
        let set = run_approach(&data, Approach::Dann, spec, &config.train, config.execution)?;
        write_trials(config, &format!("sweep_layers{layers}"), &set)?;
        sets.push((layers, set));
    }
    let refs: Vec<(usize, &TrialSet)> = sets.iter().map(|(l, s)| (*l, s)).collect();
    let table = SweepTable::build(&data.name, &config.attribute.to_string(), &refs);
    write(&config.out.join("sweep.csv"), &table.to_csv())?;
    Ok(table)
}

/// Target, src and DANN for both structures; writes `compare.csv` and
/// `summary.txt`.
pub fn run_compare(config: &ExperimentConfig) -> Result<ComparisonTable> {
    config.validate()?;
    let data = PreparedData::load(config)?;
    prepare_out(config)?;
    let mut sets = Vec::with_capacity(6);
    for structure in [Variant::Deep, Variant::Shallow] {
        let spec = NetworkSpec::for_variant(structure, data.input_dim(), config.shared_layers)
            .with_width(config.hidden_width);
        for approach in [Approach::Target, Approach::Src, Approach::Dann] {
            let set = run_approach(&data, approach, spec, &config.train, config.execution)?;
            check_isolation(approach, &set)?;
            write_trials(config, &format!("{approach}_{structure}"), &set)?;
            sets.push((approach, structure, set));
        }
    }
    let refs: Vec<(Approach, Variant, &TrialSet)> = sets.iter().map(|(a, v, s)| (*a, *v, s)).collect();
    let table = ComparisonTable::build(&data.name, &refs)?;
    write(&config.out.join("compare.csv"), &table.to_csv())?;
    write(&config.out.join("summary.txt"), &table.summary())?;
    Ok(table)
}

/// Baselines must never train on (or select with) the other domain's rows.
fn check_isolation(approach: Approach, set: &TrialSet) -> Result<()> {
    for r in set.successful() {
        let leaked = match approach {
            Approach::Src => r.rows_read.target,
            Approach::Target => r.rows_read.source,
            Approach::Dann => 0,
        };
        if leaked > 0 {
            return Err(Error::InvalidState(format!(
                "{approach} baseline read {leaked} rows of the other domain in trial {}",
                r.trial
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSeparation {
    /// 1-based shared layer.
    pub layer: usize,
    pub dann: f64,
    pub src: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualizeOutcome {
    pub layers: Vec<LayerSeparation>,
    /// Held-out accuracy of the DANN domain head.
    pub dann_domain_accuracy: f64,
    /// Held-out accuracy of a domain classifier trained on the frozen
    /// source-only representation.
    pub src_probe_accuracy: f64,
}

impl VisualizeOutcome {
    pub fn final_layer(&self) -> &LayerSeparation {
        self.layers.last().expect("at least one shared layer")
    }
}

/// Trains one DANN and one source-only model (deep structure, seed
/// `config.train.seed`) and projects test activations of every shared layer.
///
/// Writes `projection_layer{k}.csv` (DANN), `projection_src_layer{k}.csv`
/// `separability.csv` and `domain_probe.csv`.
pub fn run_visualize(config: &ExperimentConfig) -> Result<VisualizeOutcome> {
    config.validate()?;
    let data = PreparedData::load(config)?;
    prepare_out(config)?;
    let spec = NetworkSpec::deep(data.input_dim(), config.shared_layers).with_width(config.hidden_width);
    let (dann, _) = train_once(&data, Approach::Dann, spec, &config.train)?;
    let (src, _) = train_once(&data, Approach::Src, spec, &config.train)?;

    let n = data.source_test.len().min(data.target_test.len());
    let rows: Vec<usize> = (0..n).collect();
    let xs = data.source_test.features.values.select(Axis(0), &rows);
    let xt = data.target_test.features.values.select(Axis(0), &rows);
    let dann_views = dump_representations(&dann, &xs, &xt)?;
    let src_views = dump_representations(&src, &xs, &xt)?;
    let mut layers = Vec::with_capacity(dann_views.len());
    for (k, (d, s)) in dann_views.iter().zip(&src_views).enumerate() {
        write(&config.out.join(format!("projection_layer{}.csv", k + 1)), &d.to_csv())?;
        write(&config.out.join(format!("projection_src_layer{}.csv", k + 1)), &s.to_csv())?;
        layers.push(LayerSeparation {
            layer: k + 1,
            dann: nearest_centroid_accuracy(d)?,
            src: nearest_centroid_accuracy(s)?,
        });
    }

    let dann_domain_accuracy = domain_confusion_probe(&dann, &data.probe)?;
    let probe_config = FrozenProbeConfig {
        epochs: config.probe_epochs,
        batch_size: config.train.batch_size,
        learning_rate: config.train.learning_rate,
        seed: config.train.seed,
    };
    let src_probe_accuracy =
        frozen_representation_probe(&src, &data.source_train.features, &data.target_pool, &data.probe, probe_config)?;

    let mut csv = String::from("layer,dann_separability,src_separability\n");
    for l in &layers {
        let _ = writeln!(csv, "{},{},{}", l.layer, l.dann, l.src);
    }
    write(&config.out.join("separability.csv"), &csv)?;
    write(
        &config.out.join("domain_probe.csv"),
        &format!("model,accuracy\ndann,{dann_domain_accuracy}\nsrc_frozen,{src_probe_accuracy}\n"),
    )?;
    Ok(VisualizeOutcome {
        layers,
        dann_domain_accuracy,
        src_probe_accuracy,
    })
}
