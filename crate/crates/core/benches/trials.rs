use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dannlab::data::{generate_shift_task, SyntheticShiftSpec};
use dannlab::harness::{run_approach, Approach, PreparedData};
use dannlab::model::NetworkSpec;
use dannlab::parallel::Execution;
use dannlab::trainer::TrainConfig;

fn trials(c: &mut Criterion) {
    let spec = SyntheticShiftSpec {
        n_source: 400,
        n_target: 400,
        feature_dim: 16,
        ..SyntheticShiftSpec::default()
    }
    .with_translation_norm(2.0);
    let task = generate_shift_task(&spec).unwrap();
    let data =
        PreparedData::from_raw("bench", &task.source, &task.target_labeled, Some(&task.target_pool), [0.7, 0.15, 0.15], 0)
            .unwrap();
    let net = NetworkSpec::deep(data.input_dim(), 1).with_width(32);
    let config = TrainConfig {
        epochs: 12,
        batch_size: 64,
        trials: 8,
        seed: 1,
        ..TrainConfig::default()
    };

    let mut group = c.benchmark_group("dann_trials");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_approach(&data, Approach::Dann, net, &config, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
