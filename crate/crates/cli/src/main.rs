use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ehplan_cli::Cli::parse();
    match ehplan_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
