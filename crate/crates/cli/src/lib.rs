//! Command-line front end for `nibm`. Every subcommand writes its outputs and
//! a [`RunManifest`] into one directory; `rerun` replays a manifest and checks
//! the output digests.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use std::path::PathBuf;

pub use args::{Cli, Command};
pub use commands::{execute, rerun, RerunReport, DEFAULT_OUT_DIR};
pub use error::{CliError, Result};
pub use output::{RunManifest, MANIFEST_FILE};

/// Runs a parsed command line; returns the text for stdout.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Rerun(r) => {
            let report = rerun(&r.manifest, cli.out.as_deref())?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
            if report.identical {
                Ok(text)
            } else {
                Err(CliError::Mismatch(text))
            }
        }
        cmd => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
            let (path, manifest) = execute(cmd, &out)?;
            let files: Vec<&str> = manifest.outputs.iter().map(|f| f.file.as_str()).collect();
            Ok(serde_json::json!({ "manifest": path, "outputs": files }).to_string())
        }
    }
}

/// JSON error object for stderr.
pub fn error_json(err: &CliError, command: &Command) -> String {
    serde_json::json!({
        "code": err.code(),
        "message": err.to_string(),
        "params": command,
    })
    .to_string()
}
