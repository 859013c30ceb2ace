//! Command-line front end. Every subcommand takes the same flags; values
//! given on the command line override those in `--config`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pspin_qfc::config::{parse_s_tokens, ConfigFile, SValues};
use pspin_qfc::{runner, EngineKind, Error, Experiment, RunConfig};

#[derive(Parser)]
#[command(name = "qfc", version, about = "Quantum feedback simulation of mean-field p-spin dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectories from a grid of initial conditions
    PhasePortrait(Flags),
    /// Similarity of simulated and classical phase portraits
    Similarity(Flags),
    /// Long-time order parameters versus s and the dynamical critical point
    DptScan(Flags),
    /// Final-Z statistics of adiabatic passages
    Symmetry(Flags),
    /// Closed-form and numerically optimal measurement resolution
    OptimalMu(Flags),
    /// Onset, equilibrium and dynamical critical points
    CriticalPoints(Flags),
    /// Average similarity over a grid of (s, N)
    QcHeatmap(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML config file, or a manifest.json from an earlier run
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    engine: Option<EngineKind>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    p: Option<Vec<u32>>,
    /// Values or inclusive ranges `start:stop:step`
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    s: Option<Vec<String>>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    n_particles: Option<Vec<u64>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    record_stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Side of the initial-condition grid
    #[arg(long)]
    n_sim: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    paper_scale: bool,
}

impl Command {
    fn split(self) -> (Experiment, Flags) {
        match self {
            Command::PhasePortrait(f) => (Experiment::PhasePortrait, f),
            Command::Similarity(f) => (Experiment::Similarity, f),
            Command::DptScan(f) => (Experiment::DptScan, f),
            Command::Symmetry(f) => (Experiment::Symmetry, f),
            Command::OptimalMu(f) => (Experiment::OptimalMu, f),
            Command::CriticalPoints(f) => (Experiment::CriticalPoints, f),
            Command::QcHeatmap(f) => (Experiment::QcHeatmap, f),
        }
    }
}

fn resolve(experiment: Experiment, f: Flags) -> pspin_qfc::Result<RunConfig> {
    let file = match &f.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut over = ConfigFile {
        experiment: Some(experiment),
        engine: f.engine,
        seed: f.seed,
        workers: f.workers,
        output_dir: f.out,
        paper_scale: f.paper_scale.then_some(true),
        ..Default::default()
    };
    over.model.p = f.p;
    over.model.s = f.s.map(|t| parse_s_tokens(&t)).transpose()?.map(SValues::List);
    over.model.n_particles = f.n_particles;
    over.protocol.dt = f.dt;
    over.protocol.mu = f.mu;
    over.protocol.steps = f.steps;
    over.protocol.record_stride = f.record_stride;
    over.analysis.runs = f.runs;
    over.analysis.n_sim = f.n_sim;
    RunConfig::resolve(file.overlay(over))
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let (experiment, flags) = Cli::parse().command.split();
    let result = resolve(experiment, flags).and_then(|cfg| runner::run(&cfg));
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for f in &report.manifest.failures {
                eprintln!("task failed: {f}");
            }
            eprintln!("wrote {}", report.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qfc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
