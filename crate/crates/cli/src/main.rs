use std::process::ExitCode;

use clap::Parser;
use risktool::{describe, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", describe(&e));
            ExitCode::from(e.exit_code())
        }
    }
}
