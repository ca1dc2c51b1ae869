use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pilothop::{run_file, validate, CliError, RunOptions};

#[derive(Parser)]
#[command(
    name = "pilothop",
    version,
    about = "Random pilot-hopping access experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment spec and write its results.
    Run {
        spec: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to the spec's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a spec and list every problem found.
    Validate { spec: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run {
            spec,
            seed,
            out,
            jobs,
        } => {
            let opts = RunOptions {
                seed,
                out_dir: out,
                jobs,
            };
            match run_file(&spec, &opts) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Validate { spec } => {
            let text = match fs::read_to_string(&spec) {
                Ok(t) => t,
                Err(e) => return fail(CliError::io(&spec, e)),
            };
            match validate(&text) {
                Ok(diags) if diags.is_empty() => {
                    println!("ok");
                    ExitCode::SUCCESS
                }
                Ok(diags) => fail(CliError::Invalid(diags)),
                Err(e) => fail(e.into()),
            }
        }
    }
}
