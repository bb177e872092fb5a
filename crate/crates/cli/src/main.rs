use std::process::ExitCode;

use clap::Parser;
use nibm_cli::{error_json, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            let err = CliError::Usage(format!("--threads {k}: {e}"));
            eprintln!("{}", error_json(&err, &cli.command));
            return ExitCode::from(err.exit_code() as u8);
        }
    }
    match run(&cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", error_json(&err, &cli.command));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
