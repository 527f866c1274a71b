use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use wdro_cli::{catalog, run, RunOptions, THREADS_ENV};

#[derive(Parser)]
#[command(name = "wdro", version, about = "Wasserstein distributionally robust bounds: batch runner and catalog")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configuration of a JSON run file and write CSV reports.
    Run {
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for running configurations in parallel.
        #[arg(long, env = THREADS_ENV, value_parser = clap::value_parser!(u16).range(1..))]
        threads: Option<u16>,
        /// Also write trace.jsonl with dual bisection steps and solver iterates.
        #[arg(long)]
        trace: bool,
        /// Fill the runtime_ms columns (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// List every supported loss and cost pairing.
    Catalog,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Catalog => {
            print!("{}", catalog::render());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, threads, trace, timing } => {
            let opts = RunOptions { config, out, threads: threads.map(usize::from), trace, timing };
            match run(&opts) {
                Ok(summary) => {
                    eprintln!(
                        "{} configs, {} with failures; wrote {} files to {}",
                        summary.configs,
                        summary.failed_configs,
                        summary.files.len(),
                        opts.out.display()
                    );
                    ExitCode::from(summary.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
