//! `aqec`: runs the reproduction experiments and writes plot-ready data.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use aqec_core::rl::TrainConfig;
use aqec_core::{CodeName, SolverChoice};
use clap::{Parser, Subcommand};

use commands::noise::NoiseKind;
use commands::Ctx;
use config::ExperimentConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "aqec", version, about = "Autonomous QEC simulation and code discovery")]
struct Cli {
    /// JSON config; for `train` a training config, otherwise an experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default `runs/<experiment>-<config hash>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    solver: Option<SolverChoice>,

    /// Compare against the expected values and exit with 4 on any miss.
    #[arg(long, global = true)]
    check: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean fidelity curves with and without double-photon loss.
    Evaluate {
        #[arg(long, value_delimiter = ',')]
        code: Vec<CodeName>,
    },
    /// Fidelity over the logical Bloch sphere at one time.
    ScanBloch {
        #[arg(long, value_delimiter = ',')]
        code: Vec<CodeName>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Structured solver against the dense integrator.
    Benchmark {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Non-Markovian ancilla noise sweeps.
    Noise {
        #[arg(value_enum)]
        kind: NoiseKind,
    },
    /// Wigner functions of the six cardinal states at zero and at `tau`.
    Wigner {
        #[arg(long, value_delimiter = ',')]
        code: Vec<CodeName>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Two-phase curriculum training.
    Train,
    /// GRL fidelity for several ladder weightings.
    XiScan {
        #[arg(long, value_delimiter = ',')]
        xi: Vec<f64>,
    },
    /// Knill–Laflamme check and Hamiltonian distances.
    Kl {
        #[arg(long, value_delimiter = ',')]
        code: Vec<CodeName>,
    },
    /// GRL under the three-mode coupling-engineering model.
    Rwa,
    /// Prints the default config for an experiment.
    Config { experiment: String },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Evaluate { .. } => "evaluate",
            Command::ScanBloch { .. } => "scan-bloch",
            Command::Benchmark { .. } => "benchmark",
            Command::Noise { .. } => "noise",
            Command::Wigner { .. } => "wigner",
            Command::Train => "train",
            Command::XiScan { .. } => "xi-scan",
            Command::Kl { .. } => "kl",
            Command::Rwa => "rwa",
            Command::Config { .. } => "config",
        }
    }
}

const EXPERIMENTS: [&str; 9] = [
    "evaluate",
    "scan-bloch",
    "benchmark",
    "noise",
    "wigner",
    "train",
    "xi-scan",
    "kl",
    "rwa",
];

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.solver {
        cfg.solver = s;
    }
    match &cli.command {
        Command::Evaluate { code } | Command::Kl { code } if !code.is_empty() => {
            cfg.codes = code.clone();
            cfg.custom.clear();
        }
        Command::ScanBloch { code, tau } | Command::Wigner { code, tau } => {
            if !code.is_empty() {
                cfg.codes = code.clone();
                cfg.custom.clear();
            }
            if tau.is_some() {
                cfg.tau = *tau;
            }
        }
        Command::Benchmark { dims, repeats } => {
            if !dims.is_empty() {
                cfg.benchmark.dims = dims.clone();
            }
            if let Some(r) = repeats {
                cfg.benchmark.repeats = *r;
            }
        }
        Command::XiScan { xi } if !xi.is_empty() => cfg.xis = xi.clone(),
        _ => {}
    }
    cfg.validate(cli.command.name())?;
    Ok(cfg)
}

fn print_template(experiment: &str) -> Result<(), CliError> {
    let text = match experiment {
        "train" => serde_json::to_string_pretty(&TrainConfig::default())?,
        e if EXPERIMENTS.contains(&e) => serde_json::to_string_pretty(&ExperimentConfig {
            experiment: Some(e.to_string()),
            ..ExperimentConfig::default()
        })?,
        e => {
            return Err(CliError::Config(format!(
                "unknown experiment '{e}' (expected one of {})",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    println!("{text}");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        out: cli.out.clone(),
        check: cli.check,
    };
    match &cli.command {
        Command::Config { experiment } => print_template(experiment),
        Command::Train => {
            let mut cfg = commands::train::load(cli.config.as_deref())?;
            if let Some(seed) = cli.seed {
                cfg.seeds = vec![seed];
            }
            commands::train::run(&ctx, &cfg)
        }
        cmd => {
            let cfg = experiment_config(&cli)?;
            match cmd {
                Command::Evaluate { .. } => commands::evaluate::run(&ctx, &cfg),
                Command::ScanBloch { .. } => commands::scan::run(&ctx, &cfg),
                Command::Benchmark { .. } => commands::benchmark::run(&ctx, &cfg),
                Command::Noise { kind } => commands::noise::run(&ctx, &cfg, *kind),
                Command::Wigner { .. } => commands::wigner::run(&ctx, &cfg),
                Command::XiScan { .. } => commands::analysis::xi_scan(&ctx, &cfg),
                Command::Kl { .. } => commands::analysis::kl(&ctx, &cfg),
                Command::Rwa => commands::rwa::run(&ctx, &cfg),
                Command::Config { .. } | Command::Train => unreachable!("handled above"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
