use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qbench_cli::{execute, Cli, Cmd};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match execute(&cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let output = match &cli.command {
        Cmd::Run(a) => a.output.clone(),
        _ => None,
    };
    let written = match output {
        Some(path) => std::fs::write(&path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
