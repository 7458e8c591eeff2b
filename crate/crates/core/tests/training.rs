use dannlab::data::{generate_shift_task, Attribute, DomainTag, FeatureMatrix, LabeledDataset, SyntheticShiftSpec};
use ndarray::{Array1, Array2};
use rand::Rng as _;
use dannlab::harness::{train_once, Approach, PreparedData};
use dannlab::model::{DannModel, NetworkSpec};
use dannlab::nn::Param;
use dannlab::parallel::Execution;
use dannlab::trainer::{run_trials, train_baseline, train_dann, Evaluation, LambdaSchedule, TrainConfig, TrialReport};
use dannlab::Error;

fn small_task(rotation: f64) -> PreparedData {
    let spec = SyntheticShiftSpec {
        n_source: 240,
        n_target: 240,
        latent_dim: 4,
        feature_dim: 12,
        rotation_angle: rotation,
        ..SyntheticShiftSpec::default()
    }
    .with_translation_norm(1.0);
    let task = generate_shift_task(&spec).unwrap();
    PreparedData::from_raw("small", &task.source, &task.target_labeled, Some(&task.target_pool), [0.7, 0.15, 0.15], 0)
        .unwrap()
}

fn quick_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 32,
        trials: 3,
        seed: 11,
        lambda_warmup_epochs: 1,
        ..TrainConfig::default()
    }
}

fn snapshot(params: Vec<&Param>) -> Vec<Vec<u64>> {
    params.iter().map(|p| p.value.iter().map(|v| v.to_bits()).collect()).collect()
}

#[test]
fn lambda_schedule_shape() {
    let s = LambdaSchedule::new(10, 100, 1.0).unwrap();
    for e in 1..=10 {
        assert_eq!(s.lambda_at(e).unwrap(), 0.0);
    }
    assert_eq!(s.lambda_at(100).unwrap(), 1.0);
    assert!((s.lambda_at(55).unwrap() - 0.5).abs() <= 1e-15);
    let values: Vec<f64> = (1..=100).map(|e| s.lambda_at(e).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!(matches!(s.lambda_at(0), Err(Error::InvalidArgument(_))));
    assert!(matches!(s.lambda_at(101), Err(Error::InvalidArgument(_))));
}

#[test]
fn zero_lambda_dann_tracks_source_baseline() {
    let data = small_task(30.0);
    let spec = NetworkSpec::deep(data.input_dim(), 2).with_width(16);
    for epochs in 1..=4 {
        let config = TrainConfig {
            lambda_warmup_epochs: 0,
            lambda_final: 0.0,
            ..quick_config(epochs)
        };
        let eval = Evaluation::default();
        let (dann, dann_report) = train_dann(
            DannModel::build(spec, config.seed).unwrap(),
            &data.source_train,
            &data.target_pool,
            &eval,
            &config,
        )
        .unwrap();
        let (base, base_report) = train_baseline(
            DannModel::build_baseline(spec, config.seed).unwrap(),
            &data.source_train,
            &data.source_dev,
            &eval,
            &config,
        )
        .unwrap();
        assert_eq!(snapshot(dann.task_head.params()), snapshot(base.task_head.params()), "task head after {epochs}");
        assert_eq!(snapshot(dann.shared.params()), snapshot(base.shared.params()), "shared after {epochs}");
        assert_eq!(dann_report.final_task_loss.to_bits(), base_report.final_task_loss.to_bits());
        assert!(dann_report.rows_read.target > 0);
    }
}

#[test]
fn baselines_never_read_the_other_domain() {
    let data = small_task(30.0);
    let spec = NetworkSpec::deep(data.input_dim(), 1).with_width(8);
    let config = quick_config(3);
    let (_, src) = train_once(&data, Approach::Src, spec, &config).unwrap();
    assert_eq!(src.rows_read.target, 0);
    assert!(src.rows_read.source > 0);
    let (_, tgt) = train_once(&data, Approach::Target, spec, &config).unwrap();
    assert_eq!(tgt.rows_read.source, 0);
    assert!(tgt.rows_read.target > 0);
}

#[test]
fn trials_are_deterministic_and_order_independent() {
    let data = small_task(30.0);
    let spec = NetworkSpec::deep(data.input_dim(), 1).with_width(8);
    let config = quick_config(3);
    let run = |exec| {
        run_trials(&config, exec, |_, c| train_once(&data, Approach::Dann, spec, c).map(|(_, r)| r)).unwrap()
    };
    let seq = run(Execution::Sequential);
    let par = run(Execution::Parallel);
    let again = run(Execution::Parallel);
    for ((a, b), c) in seq.reports.iter().zip(&par.reports).zip(&again.reports) {
        assert!(a.same_outcome(b));
        assert!(b.same_outcome(c));
    }
    assert_eq!(seq.reports.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![11, 12, 13]);
    assert_eq!(seq.aggregate, par.aggregate);
}

#[test]
fn numeric_failures_are_recorded_not_fatal() {
    let config = quick_config(1);
    let set = run_trials(&config, Execution::Sequential, |t, c| {
        if t == 1 {
            Err(Error::Numeric("diverged".into()))
        } else {
            let mut r = TrialReport::failed(t, c.seed, String::new());
            r.failure = None;
            Ok(r)
        }
    })
    .unwrap();
    assert_eq!(set.aggregate.failed, 1);
    assert_eq!(set.aggregate.trials, 2);
    assert!(set.reports[1].failure.is_some());
    let fatal = run_trials(&config, Execution::Sequential, |_, _| Err(Error::InvalidInput("bad".into())));
    assert!(fatal.is_err());
}

#[test]
fn linear_task_is_learned() {
    let mut rng = dannlab::seeded_rng(3, 0);
    let x = Array2::from_shape_simple_fn((600, 8), || rng.random_range(-1.0..1.0));
    let w = Array1::from_iter((0..8).map(|j| if j % 2 == 0 { 0.35 } else { -0.3 }));
    let y = x.dot(&w);
    let features = FeatureMatrix::new((0..600).map(|i| i.to_string()).collect(), x, DomainTag::Source).unwrap();
    let all = LabeledDataset::new(features, Attribute::Valence, y).unwrap();
    let data = PreparedData::from_raw("lin", &all, &all, None, [0.8, 0.1, 0.1], 0).unwrap();
    let config = TrainConfig {
        epochs: 100,
        batch_size: 64,
        trials: 1,
        seed: 2,
        ..TrainConfig::default()
    };
    let model = DannModel::build_baseline(NetworkSpec::deep(data.input_dim(), 1), 2).unwrap();
    let eval = Evaluation {
        splits: vec![("train".into(), &data.source_train)],
        ..Default::default()
    };
    let (_, report) = train_baseline(model, &data.source_train, &data.source_dev, &eval, &config).unwrap();
    let ccc = report.metric("train").unwrap().ccc;
    assert!(ccc > 0.9, "train CCC {ccc}");
    assert_eq!(report.dev_trace.len(), 100);
}

#[test]
fn adversarial_training_confuses_the_domain_head() {
    let data = PreparedData::load(&dannlab::harness::ExperimentConfig::new(dannlab::harness::ExperimentKind::Compare))
        .unwrap();
    let spec = NetworkSpec::deep(data.input_dim(), 1).with_width(32);
    let config = TrainConfig {
        seed: 17,
        trials: 1,
        ..TrainConfig::default()
    };
    let (_, report) = train_once(&data, Approach::Dann, spec, &config).unwrap();
    let acc = &report.domain_accuracy;
    assert_eq!(acc.len(), 100);
    assert!(acc[99] < acc[10], "epoch 11 {} vs final {}", acc[10], acc[99]);
    assert_eq!(report.lambda_trace[54], 0.5);
}
