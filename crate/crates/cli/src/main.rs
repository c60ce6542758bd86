use std::process::ExitCode;

use clap::Parser;
use lirkw::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match lirkw::run(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            // error messages already embed their sources
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
