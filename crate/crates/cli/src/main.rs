use std::process::ExitCode;

use clap::Parser;
use coinzk_cli::{command_echo, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli, command_echo(std::env::args().skip(1))) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    print!("{}", report.human());
    if let Some(path) = &cli.json {
        if let Err(e) = std::fs::write(path, report.to_json() + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(5);
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
