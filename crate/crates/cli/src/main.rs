use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dannlab::data::{generate_shift_task, write_csv};
use dannlab::harness::{run_compare, run_sweep, run_visualize, DataSource, ExperimentConfig, ExperimentKind};
use dannlab::parallel::Execution;

#[derive(Parser)]
#[command(name = "dannlab", version, about = "Domain-adversarial attribute regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// DANN at each shared-layer count; writes sweep.csv.
    Sweep(Overrides),
    /// Target, source-only and DANN for both structures; writes compare.csv and summary.txt.
    Compare(Overrides),
    /// Per-layer 2-D projections of a trained DANN and source-only model.
    Visualize(Overrides),
    /// Writes the synthetic shift task as source.csv, target.csv and target_pool.csv.
    GenData(Overrides),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Run trials one after another.
    #[arg(long)]
    sequential: bool,
}

impl Overrides {
    fn load(&self, kind: ExperimentKind) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::new(kind),
        };
        cfg.kind = kind;
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(trials) = self.trials {
            cfg.train.trials = trials;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn gen_data(args: &Overrides) -> anyhow::Result<()> {
    let cfg = args.load(ExperimentKind::Compare)?;
    let DataSource::Synthetic(mut spec) = cfg.data else {
        bail!(dannlab::Error::Config("gen-data needs synthetic data settings".into()));
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let task = generate_shift_task(&spec)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write_csv(&cfg.out.join("source.csv"), &task.source.features, Some(&task.source.scores))?;
    write_csv(
        &cfg.out.join("target.csv"),
        &task.target_labeled.features,
        Some(&task.target_labeled.scores),
    )?;
    write_csv(&cfg.out.join("target_pool.csv"), &task.target_pool, None)?;
    println!("wrote {} source, {} target and {} pool rows to {}", task.source.len(), task.target_labeled.len(), task.target_pool.len(), cfg.out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.load(ExperimentKind::Sweep)?;
            let table = run_sweep(&cfg)?;
            print!("{}", table.to_csv());
            if let Some(best) = table.best_layers() {
                println!("selected shared layers: {best}");
            }
        }
        Command::Compare(args) => {
            let cfg = args.load(ExperimentKind::Compare)?;
            print!("{}", run_compare(&cfg)?.summary());
        }
        Command::Visualize(args) => {
            let cfg = args.load(ExperimentKind::Visualize)?;
            let outcome = run_visualize(&cfg)?;
            for l in &outcome.layers {
                println!("layer {}: separability dann={:.4} src={:.4}", l.layer, l.dann, l.src);
            }
            println!("domain accuracy dann={:.4} src_frozen_probe={:.4}", outcome.dann_domain_accuracy, outcome.src_probe_accuracy);
        }
        Command::GenData(args) => gen_data(&args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=usage message={first:?}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<dannlab::Error>().map_or("internal", |d| d.kind());
            eprintln!("error kind={kind} message={:?}", format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
