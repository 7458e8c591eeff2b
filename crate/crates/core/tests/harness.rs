use std::collections::BTreeMap;
use std::path::Path;

use dannlab::data::{load_csv, write_csv, DomainTag, SyntheticShiftSpec};
use dannlab::harness::{
    dump_layer, run_compare, run_sweep, run_visualize, train_once, Approach, ComparisonTable, DataSource,
    ExperimentConfig, ExperimentKind, PreparedData,
};
use dannlab::model::{NetworkSpec, Variant};
use dannlab::Error;

fn tiny(kind: ExperimentKind, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.data = DataSource::Synthetic(
        SyntheticShiftSpec {
            n_source: 160,
            n_target: 160,
            latent_dim: 3,
            feature_dim: 10,
            ..SyntheticShiftSpec::default()
        }
        .with_translation_norm(1.0),
    );
    cfg.sweep_layers = vec![1, 2];
    cfg.hidden_width = 8;
    cfg.train.epochs = 4;
    cfg.train.lambda_warmup_epochs = 1;
    cfg.train.batch_size = 32;
    cfg.train.trials = 2;
    cfg.train.seed = 5;
    cfg.probe_epochs = 2;
    cfg.out = out.to_path_buf();
    cfg
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn sweep_table_shape_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_sweep(&tiny(ExperimentKind::Sweep, dir.path())).unwrap();
    assert_eq!(table.rows.len(), 2);
    for r in &table.rows {
        assert!(r.cells.ccc.mean.is_finite() && r.cells.rmse.mean.is_finite() && r.cells.pr.mean.is_finite());
    }
    let best = table
        .rows
        .iter()
        .max_by(|a, b| a.cells.ccc.mean.total_cmp(&b.cells.ccc.mean))
        .unwrap()
        .shared_layers;
    assert_eq!(table.best_layers(), Some(best));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn compare_table_has_every_cell_and_consistent_flags() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_compare(&tiny(ExperimentKind::Compare, dir.path())).unwrap();
    assert_eq!(table.rows.len(), 6);
    for v in [Variant::Deep, Variant::Shallow] {
        for a in [Approach::Target, Approach::Src, Approach::Dann] {
            assert!(table.get(a, v).is_some());
        }
        let dann = table.get(Approach::Dann, v).unwrap();
        let p = dann.p_value.unwrap();
        assert_eq!(dann.significant, p < 0.05);
    }
    for name in ["compare.csv", "summary.txt", "trials_dann_deep.csv", "summary_src_shallow.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let rebuilt = ComparisonTable { rows: table.rows.clone() };
    assert_eq!(std::fs::read_to_string(dir.path().join("compare.csv")).unwrap(), rebuilt.to_csv());
}

#[test]
fn visualize_writes_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(ExperimentKind::Visualize, dir.path());
    cfg.shared_layers = 2;
    let outcome = run_visualize(&cfg).unwrap();
    assert_eq!(outcome.layers.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("projection_layer2.csv")).unwrap();
    let data = PreparedData::load(&cfg).unwrap();
    let n = data.source_test.len().min(data.target_test.len());
    assert_eq!(csv.lines().count(), 1 + 2 * n);
    assert!(csv.starts_with("x,y,domain\n"));
    assert!(dir.path().join("projection_src_layer1.csv").exists());
    assert!((0.0..=1.0).contains(&outcome.dann_domain_accuracy));
}

#[test]
fn reruns_are_bitwise_identical() {
    for kind in [ExperimentKind::Sweep, ExperimentKind::Compare, ExperimentKind::Visualize] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let run = |dir: &Path| match kind {
            ExperimentKind::Sweep => run_sweep(&tiny(kind, dir)).map(|_| ()),
            ExperimentKind::Compare => run_compare(&tiny(kind, dir)).map(|_| ()),
            ExperimentKind::Visualize => run_visualize(&tiny(kind, dir)).map(|_| ()),
        };
        run(a.path()).unwrap();
        run(b.path()).unwrap();
        let (fa, fb) = (read_dir(a.path()), read_dir(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{kind:?}");
    }
}

#[test]
fn layer_index_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(ExperimentKind::Visualize, dir.path());
    let data = PreparedData::load(&cfg).unwrap();
    let spec = NetworkSpec::deep(data.input_dim(), 2).with_width(8);
    let (model, _) = train_once(&data, Approach::Dann, spec, &cfg.train).unwrap();
    let x = &data.source_test.features.values;
    let y = &data.target_test.features.values;
    assert!(dump_layer(&model, x, y, 2).is_ok());
    assert!(matches!(dump_layer(&model, x, y, 3), Err(Error::InvalidArgument(_))));
}

#[test]
fn csv_experiment_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let task = dannlab::data::generate_shift_task(&SyntheticShiftSpec {
        n_source: 120,
        n_target: 120,
        latent_dim: 3,
        feature_dim: 6,
        ..SyntheticShiftSpec::default()
    }
    .with_translation_norm(1.0))
    .unwrap();
    write_csv(&dir.path().join("src.csv"), &task.source.features, Some(&task.source.scores)).unwrap();
    write_csv(&dir.path().join("tgt.csv"), &task.target_labeled.features, Some(&task.target_labeled.scores)).unwrap();
    let back = load_csv(&dir.path().join("src.csv"), DomainTag::Source).unwrap();
    assert_eq!(back.features.values, task.source.features.values);
    let out = dir.path().join("out");
    let text = format!(
        "kind = compare\ndata.kind = csv\ndata.source = src.csv\ndata.target = tgt.csv\nnet.hidden_width = 8\ntrain.epochs = 3\ntrain.lambda_warmup_epochs = 1\ntrain.batch_size = 16\ntrain.trials = 2\nout = {}\n",
        out.display()
    );
    std::fs::write(dir.path().join("exp.cfg"), text).unwrap();
    let cfg = ExperimentConfig::from_file(&dir.path().join("exp.cfg")).unwrap();
    assert_eq!(cfg.name, "src");
    let table = run_compare(&cfg).unwrap();
    assert!(table.rows.iter().all(|r| r.source == "src"));
    assert!(out.join("summary.txt").exists());
}
