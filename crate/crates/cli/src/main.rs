mod args;
mod commands;
mod render;

use std::io::Write;
use std::process::ExitCode;

use algprob::Error;
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Format};
use commands::{dispatch, resolve_tol, Ctx};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 1;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            println!("{}", serde_json::to_string_pretty(&obj).expect("serializable"));
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL })
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let ctx = Ctx { global: &cli.global, tol: resolve_tol(cli.global.tol)? };
    let report = dispatch(&cli.command, &ctx)?;
    let mut body = match cli.global.format {
        Format::Json => serde_json::to_string_pretty(&report.json)?,
        Format::Text => report.text,
        Format::Csv => report
            .csv
            .ok_or_else(|| Error::Configuration("csv output is not available for this command".into()))?,
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &cli.global.out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::Configuration(format!("stdout: {e}")))
        }
    }
}
