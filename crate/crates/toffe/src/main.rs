mod commands;
mod config;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "toffe", version, about = "Event-camera speed separation and pose readout")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (INI)
    #[arg(long)]
    config: PathBuf,
    /// Override the dataset spatial scale factor
    #[arg(long)]
    scale: Option<f64>,
    /// Restrict training to one speed bin (train-ofs only)
    #[arg(long)]
    bin: Option<usize>,
    /// Override the command's RNG seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the event dataset with ground truth
    Gen(CommonArgs),
    /// Train the per-bin spiking speed separators
    TrainOfs(CommonArgs),
    /// Train the pose/direction readout network
    TrainOfpd(CommonArgs),
    /// Run cascade inference over an event file
    Infer(CommonArgs),
    /// Score the trained stack on the held-out split
    Eval(CommonArgs),
    /// Run the dt and noise sweeps
    Sweep(CommonArgs),
}

impl Cmd {
    fn common(&self) -> &CommonArgs {
        match self {
            Cmd::Gen(a) | Cmd::TrainOfs(a) | Cmd::TrainOfpd(a) | Cmd::Infer(a) | Cmd::Eval(a)
            | Cmd::Sweep(a) => a,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let args = cli.cmd.common();
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(scale) = args.scale {
        cfg.dataset.scale = scale;
    }
    if args.bin.is_some() && !matches!(cli.cmd, Cmd::TrainOfs(_)) {
        eprintln!("note: --bin only applies to train-ofs; ignoring");
    }
    if let Some(seed) = args.seed {
        match cli.cmd {
            Cmd::Gen(_) => cfg.dataset.seed = seed,
            Cmd::TrainOfs(_) => cfg.ofs.seed = seed,
            Cmd::TrainOfpd(_) => cfg.ofpd.seed = seed,
            Cmd::Sweep(_) => cfg.sweep.noise_seed = seed,
            Cmd::Infer(_) | Cmd::Eval(_) => {
                eprintln!("note: --seed has no effect on deterministic inference; ignoring");
            }
        }
    }
    match cli.cmd {
        Cmd::Gen(_) => commands::gen(&cfg),
        Cmd::TrainOfs(ref a) => commands::train_ofs_cmd(&cfg, a.bin),
        Cmd::TrainOfpd(_) => commands::train_ofpd_cmd(&cfg),
        Cmd::Infer(_) => commands::infer_cmd(&cfg),
        Cmd::Eval(_) => commands::eval_cmd(&cfg),
        Cmd::Sweep(_) => commands::sweep_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
