use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cnotsim::config::{ExperimentConfig, Pipeline};
use cnotsim::detection::MultiPairMode;
use cnotsim::{run_pipeline, Error};

/// Simulate and analyze a post-selected photonic CNOT gate.
#[derive(Parser, Debug)]
#[command(name = "cnotsim", version)]
struct Cli {
    #[command(subcommand)]
    pipeline: Command,

    /// TOML experiment configuration; defaults apply to anything left out.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// RNG seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Gate windows per analyzer setting, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    gates: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "cnotsim-out")]
    out: PathBuf,

    #[arg(long, global = true, value_enum)]
    multi_pair_mode: Option<ModeArg>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Logical-basis truth table, raw and multi-pair corrected.
    TruthTable,
    /// Tomography of the four Bell states the gate produces.
    Bell,
    /// Tomography of the output for `[tomography] input`.
    TomoState,
    /// Pure-process fit over logical and superposition inputs.
    TomoProcess,
    /// Raw Bell fidelities across `[sweep] mean_pairs`.
    Sweep,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Incoherent,
    Exact,
}

impl From<Command> for Pipeline {
    fn from(c: Command) -> Self {
        match c {
            Command::TruthTable => Pipeline::TruthTable,
            Command::Bell => Pipeline::Bell,
            Command::TomoState => Pipeline::TomoState,
            Command::TomoProcess => Pipeline::TomoProcess,
            Command::Sweep => Pipeline::Sweep,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidSettings(_) => 2,
        Error::Convergence(_) => 3,
        Error::Io(_) | Error::CountFile(_) => 4,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<PathBuf, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.pipeline = cli.pipeline.into();
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(gates) = cli.gates {
        cfg.run.n_gates = gates;
    }
    if let Some(mode) = cli.multi_pair_mode {
        cfg.run.multi_pair_mode = match mode {
            ModeArg::Incoherent => MultiPairMode::Incoherent,
            ModeArg::Exact => MultiPairMode::Exact,
        };
    }
    cfg.validate()?;
    let bundle = run_pipeline(&cfg)?;
    bundle.write_to(&cli.out)?;
    Ok(cli.out.join("result.json"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
