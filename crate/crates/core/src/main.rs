use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slownav::pipeline::{self, Artifacts, ExperimentConfig};
use slownav::{Error, Result};

#[derive(Parser)]
#[command(name = "slownav", version, about = "Slow feature analysis and LSPI for simulated visual navigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment directory holding all artifacts.
    #[arg(long, default_value = "slownav-out")]
    out: PathBuf,
    /// Preset name (rectangle, smoke, two_room) or key-value file. Defaults
    /// to the config.txt stored in the experiment directory.
    #[arg(long)]
    config: Option<String>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Record the random walk and the LSPI transition set.
    GenData(Common),
    /// Select support vectors on the walk observations.
    SelectSv(Common),
    /// Train kernel SFA on the walk.
    TrainSfa(Common),
    /// Run LSPI on the SFA (or optimal-response) features.
    TrainLspi(Common),
    /// Measure convergence quality against the reference controller.
    EvalPolicy {
        #[command(flatten)]
        common: Common,
        /// Weights file to evaluate instead of qweights.json.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Summarise the artifacts of an experiment directory.
    Report(Common),
    /// All phases in order.
    Run(Common),
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let stored = c.out.join("config.txt");
    let mut cfg = match &c.config {
        Some(spec) => ExperimentConfig::load(spec)?,
        None if stored.exists() => ExperimentConfig::load(&stored.to_string_lossy())?,
        None => ExperimentConfig::preset("rectangle")?,
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    for kv in &c.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: &Command) -> Result<()> {
    let common = match command {
        Command::GenData(c)
        | Command::SelectSv(c)
        | Command::TrainSfa(c)
        | Command::TrainLspi(c)
        | Command::Report(c)
        | Command::Run(c) => c,
        Command::EvalPolicy { common, .. } => common,
    };
    let cfg = load_config(common)?;
    let art = Artifacts::new(&common.out)?;
    match command {
        Command::GenData(_) => {
            pipeline::gen_data(&cfg, &art)?;
            println!("wrote {} and {}", art.walk().display(), art.transitions().display());
        }
        Command::SelectSv(_) => {
            let svs = pipeline::select_sv(&cfg, &art)?;
            println!("selected {} support vectors (width {:.4})", svs.len(), svs.spec.width);
        }
        Command::TrainSfa(_) => {
            let model = pipeline::train_sfa(&cfg, &art)?;
            println!("trained {} filters", model.n_filters());
        }
        Command::TrainLspi(_) => {
            let w = pipeline::train_lspi(&cfg, &art)?;
            println!("wrote {} ({} weights)", art.qweights().display(), w.w.len());
        }
        Command::EvalPolicy { weights, .. } => {
            let q = pipeline::eval_policy(&cfg, &art, weights.as_deref())?;
            println!("C = {:.4}, success {:.1}%", q.c, 100.0 * q.success_rate());
        }
        Command::Report(_) => print!("{}", pipeline::report(&cfg, &art)?.to_text()),
        Command::Run(_) => print!("{}", pipeline::run_experiment(&cfg, Path::new(&common.out))?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
