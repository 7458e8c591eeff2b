use std::path::Path;
use std::process::{Command, Output};

fn dannlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dannlab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, kind: &str) -> String {
    let path = dir.join(format!("{kind}.cfg"));
    std::fs::write(
        &path,
        format!(
            "kind = {kind}\n\
             data.synthetic.n_source = 120\n\
             data.synthetic.n_target = 120\n\
             data.synthetic.latent_dim = 3\n\
             data.synthetic.feature_dim = 8\n\
             net.sweep = 1, 2\n\
             net.hidden_width = 8\n\
             train.epochs = 3\n\
             train.lambda_warmup_epochs = 1\n\
             train.batch_size = 16\n\
             train.trials = 4\n\
             probe.epochs = 2\n"
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn compare_writes_outputs_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "compare");
    let out = dir.path().join("cmp");
    let o = dannlab(&["compare", "--config", &cfg, "--out", out.to_str().unwrap(), "--trials", "2", "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().skip(1).all(|l| l.contains(",2,")));
    let trials = std::fs::read_to_string(out.join("trials_src_deep.csv")).unwrap();
    assert!(trials.lines().nth(1).unwrap().starts_with("0,9,ok"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("structure: shallow"));
}

#[test]
fn sweep_and_visualize_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let o = dannlab(&["sweep", "--config", &write_config(dir.path(), "sweep"), "--out", out.to_str().unwrap(), "--trials", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("selected shared layers"));
    assert!(out.join("sweep.csv").exists());

    let out = dir.path().join("vis");
    let o = dannlab(&["visualize", "--config", &write_config(dir.path(), "visualize"), "--out", out.to_str().unwrap(), "--sequential"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("projection_layer1.csv").exists());
    assert!(out.join("separability.csv").exists());
}

#[test]
fn gen_data_round_trips_through_csv_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = dannlab(&["gen-data", "--config", &write_config(dir.path(), "compare"), "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["source.csv", "target.csv", "target_pool.csv"] {
        assert!(data.join(f).exists());
    }
    let header = std::fs::read_to_string(data.join("source.csv")).unwrap();
    assert!(header.starts_with("id,f0,f1,"));
    assert!(header.lines().next().unwrap().ends_with(",label"));

    let cfg = dir.path().join("csv.cfg");
    std::fs::write(
        &cfg,
        "kind = compare\ndata.kind = csv\ndata.source = data/source.csv\ndata.target = data/target.csv\ndata.target_pool = data/target_pool.csv\nnet.hidden_width = 8\ntrain.epochs = 2\ntrain.lambda_warmup_epochs = 1\ntrain.batch_size = 16\ntrain.trials = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = dannlab(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(out.join("compare.csv")).unwrap().contains("source,dann,deep"));
}

#[test]
fn failures_exit_nonzero_with_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    let o = dannlab(&["compare", "--config", missing.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error kind=io message="), "{err}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "kind = sweep\nnet.sweep = 1, 7\n").unwrap();
    let o = dannlab(&["sweep", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error kind=config "));

    let o = dannlab(&["compare", "--trials", "many"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error kind=usage "));

    let o = dannlab(&["compare", "--trials", "0"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error kind=config "));
}
