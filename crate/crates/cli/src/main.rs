use std::process::ExitCode;

use clap::Parser;
use magnon_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(artifacts) => {
            for a in artifacts {
                println!("{}", a.summary_line());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
