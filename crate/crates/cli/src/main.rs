mod commands;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use fockcat::fock::DEFAULT_TAIL_TOL;

#[derive(Debug, Parser)]
#[command(name = "fockcat", version, about = "Photon catalysis, SSV breeding and GKP synthesis in truncated Fock space")]
pub struct Cli {
    /// Fock cutoff; overrides any cutoff given in a manifest.
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    /// Seed for optimizer restarts; overrides a manifest seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Largest allowed probability in the top Fock levels of an output.
    #[arg(long, global = true, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One catalysis step on |α⟩ compared with D(β)|1⟩.
    Displace(DisplaceArgs),
    /// Run a catalysis cascade from a manifest.
    Catalyze {
        manifest: PathBuf,
        /// Re-fit the SSV target's β, ξ and restoring displacement.
        #[arg(long)]
        fit_target: bool,
    },
    /// Optimize cascades over detection tuples; writes a CSV ledger.
    Optimize { manifest: PathBuf },
    /// Aggregate success probability over imperfect detection tuples.
    Threshold { manifest: PathBuf },
    /// Breed two states on a balanced beamsplitter.
    Breed { manifest: PathBuf },
    /// Hexagonal-lattice breeding of one state with itself.
    Hex { manifest: PathBuf },
    /// Fidelity/probability map of n = 0 SSV breeding.
    Sweep { manifest: PathBuf },
    /// Wigner function of a state file on a square grid.
    Wigner {
        state: PathBuf,
        #[arg(long, default_value_t = 7.0)]
        half_width: f64,
        #[arg(long, default_value_t = 281)]
        points: usize,
    },
}

#[derive(Debug, Args)]
#[command(group = ArgGroup::new("splitter").required(true).multiple(false))]
pub struct DisplaceArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, group = "splitter")]
    pub r2: Option<f64>,
    #[arg(long, group = "splitter")]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Fixed displacement of the comparison state; optimized when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Discard the ancilla mode instead of detecting it.
    #[arg(long)]
    pub paris: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<fockcat::Error>() {
        return match e {
            fockcat::Error::ImpossibleOutcome { .. } => 2,
            fockcat::Error::Truncation { .. } => 3,
            _ => 1,
        };
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // optimizer probes routinely leave the cutoff; their truncation warnings are noise
    let level = match cli.command {
        Command::Optimize { .. } | Command::Threshold { .. } => "error",
        _ => "warn",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
