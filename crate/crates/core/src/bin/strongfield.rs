use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use strongfield::io::{error_kind, RunConfig};
use strongfield::pipeline::{execute, read_detector_table, Command, Inputs, StageError, Upstream};
use strongfield::Error;

#[derive(Parser)]
#[command(name = "strongfield", version, about = "Tunnel ionization in few-cycle pulses")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Relax the field-free ground state.
    Groundstate(StageArgs),
    /// Propagate through the pulse and store snapshots.
    Propagate(StageArgs),
    /// Wigner maps of every snapshot.
    Wigner(StageArgs),
    /// Momentum moments and quantum momentum function.
    Qmf(StageArgs),
    /// Classical trajectories compared with the QMF.
    Trajectories(StageArgs),
    /// Exit time and momentum from detector momenta.
    Reconstruct {
        #[command(flatten)]
        stage: StageArgs,
        /// Two-column table of detector momenta `p_z p_rho`.
        #[arg(long)]
        detector: Option<PathBuf>,
    },
    /// Every stage in order.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and list every problem.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.directory` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Manifest of an earlier run that supplies upstream products.
    #[arg(long)]
    stage_input: Option<PathBuf>,
}

const EXIT_INPUT: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Format(_) => EXIT_INPUT,
        _ => EXIT_COMPUTE,
    }
}

fn report(e: &StageError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e.error))
}

/// Anything wrong with a file the user pointed at, including I/O.
fn input_error(stage: &'static str, error: Error) -> ExitCode {
    eprintln!("error: {}", StageError { stage, error });
    ExitCode::from(EXIT_INPUT)
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    RunConfig::load(path).map_err(|e| input_error("config", e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, stage, detector) = match cli.command {
        Cmd::ValidateConfig { config } => {
            return match RunConfig::load(&config) {
                Ok(cfg) => {
                    println!("ok: {} (digest {})", config.display(), cfg.digest());
                    ExitCode::SUCCESS
                }
                Err(Error::Config(issues)) => {
                    for i in &issues {
                        eprintln!("{i}");
                    }
                    ExitCode::from(EXIT_INPUT)
                }
                Err(e) => input_error("config", e),
            };
        }
        Cmd::Pipeline { config, out } => (
            Command::Pipeline,
            StageArgs {
                config,
                out,
                stage_input: None,
            },
            None,
        ),
        Cmd::Groundstate(s) => (Command::GroundState, s, None),
        Cmd::Propagate(s) => (Command::Propagate, s, None),
        Cmd::Wigner(s) => (Command::Wigner, s, None),
        Cmd::Qmf(s) => (Command::Qmf, s, None),
        Cmd::Trajectories(s) => (Command::Trajectories, s, None),
        Cmd::Reconstruct { stage, detector } => (Command::Reconstruct, stage, detector),
    };
    let cfg = match load(&stage.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let mut inputs = Inputs::default();
    if let Some(m) = &stage.stage_input {
        match Upstream::open(m) {
            Ok(up) => inputs.upstream = Some(up),
            Err(e) => return input_error("stage_input", e),
        }
    }
    if let Some(d) = &detector {
        match read_detector_table(d) {
            Ok(rows) => inputs.detector = Some(rows),
            Err(e) => return input_error("detector", e),
        }
    }
    let out = stage.out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    match execute(&cfg, cmd, &out, &inputs) {
        Ok(rep) => {
            println!(
                "ok: {} products in {} ({} skipped)",
                rep.manifest.products.len(),
                out.display(),
                rep.manifest.skipped.len()
            );
            for s in &rep.manifest.skipped {
                println!("skipped {}: {}", s.stage, s.reason);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = report(&e);
            eprintln!("kind: {}", error_kind(&e.error));
            code
        }
    }
}
