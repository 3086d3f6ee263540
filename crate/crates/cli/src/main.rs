use std::process::ExitCode;

use clap::{Parser, Subcommand};
use forcerank_cli::commands::{self, DetectArgs, EvalArgs, SynthArgs, VerifyArgs};
use forcerank_cli::CliError;

/// Untrained surface anomaly detection on 3D point clouds.
///
/// Exit status: 0 success, 1 usage or configuration error, 2 data error,
/// 3 force-bound violation.
#[derive(Debug, Parser)]
#[command(name = "forcerank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic shape with conical protrusions and its truth labels.
    Synth(SynthArgs),
    /// Score and label a point cloud.
    Detect(DetectArgs),
    /// Compare predicted labels and scores against truth.
    Eval(EvalArgs),
    /// Check the pointwise force lower bound on a cloud.
    VerifyTheorem(VerifyArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => {
            for p in commands::synth(&a)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Detect(a) => {
            for p in commands::detect_cmd(&a)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Eval(a) => {
            let text = commands::eval_cmd(&a)?;
            if a.output.is_none() {
                print!("{text}");
            }
        }
        Command::VerifyTheorem(a) => {
            let text = commands::verify_cmd(&a)?;
            if a.output.is_none() {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
