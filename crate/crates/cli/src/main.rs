//! `uav-secrecy` command line: runs one experiment and writes a CSV table
//! plus `<out>.manifest.toml`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uav_secrecy::config::{ConfigFile, EvaluatorKind, ExperimentKind};
use uav_secrecy::experiment;

#[derive(Parser)]
#[command(
    name = "uav-secrecy",
    version,
    about = "Secrecy rates of a NOMA mmWave UAV downlink with a protected zone"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic vs Monte Carlo outage and rate gaps; fails if any gap is too large.
    Validate(RunArgs),
    /// Sum rate across the protected-zone half-angle for each q.
    SweepShape(RunArgs),
    /// Sum rate across the protected fraction q.
    SweepQ(RunArgs),
    /// Sum rate and outages across the transmit power.
    SweepPower(RunArgs),
    /// Best protected-zone shape for each q, with its frontier.
    Optimize(RunArgs),
    /// Monte Carlo estimates with confidence half-widths and the OMA baseline.
    Simulate(RunArgs),
    /// Print the fully resolved configuration.
    Config(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Figure preset (fig3 to fig9), beneath the file's keys.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV; defaults to `<experiment>.csv`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    evaluator: Option<EvaluatorArg>,
    /// Worker threads; defaults to the hardware concurrency.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvaluatorArg {
    Analytic,
    Mc,
}

impl ConfigArgs {
    fn layer(&self) -> uav_secrecy::Result<ConfigFile> {
        let mut layer = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if self.preset.is_some() {
            layer.preset = self.preset.clone();
        }
        Ok(layer)
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> uav_secrecy::Result<bool> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| uav_secrecy::Error::Argument(format!("threads: {e}")))?;
    }
    let flags = ConfigFile {
        experiment: Some(kind),
        seed: args.seed,
        trials: args.trials,
        evaluator: args.evaluator.map(|e| match e {
            EvaluatorArg::Analytic => EvaluatorKind::Analytic,
            EvaluatorArg::Mc => EvaluatorKind::Mc,
        }),
        ..ConfigFile::default()
    };
    let resolved = args.config.layer()?.overlay(flags).resolve()?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", kind.name())));
    let result = experiment::run(&resolved, Some(kind), &out)?;
    eprintln!(
        "{}: {} rows -> {} (manifest {})",
        kind.name(),
        result.table.rows.len(),
        result.csv.display(),
        result.manifest.display()
    );
    if !result.passed {
        eprintln!("validate: at least one analytic vs Monte Carlo gap exceeds its tolerance");
    }
    Ok(result.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(a) => run(ExperimentKind::Validate, a),
        Command::SweepShape(a) => run(ExperimentKind::SweepShape, a),
        Command::SweepQ(a) => run(ExperimentKind::SweepQ, a),
        Command::SweepPower(a) => run(ExperimentKind::SweepPower, a),
        Command::Optimize(a) => run(ExperimentKind::Optimize, a),
        Command::Simulate(a) => run(ExperimentKind::Simulate, a),
        Command::Config(a) => a.layer().and_then(|l| l.resolve()).map(|r| {
            print!("{}", r.file.to_toml());
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
