//! `sasaki`: command-line front end for `sasaki-core`.
//!
//! Exit codes: 0 success, 1 computational failure or failed check,
//! 2 invalid arguments.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use args::{CliError, OutputFormat, THREADS_ENV};
use commands::{RunError, Settings};

fn threads(flag: Option<usize>) -> Result<Option<usize>, RunError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(RunError::Usage(format!("{THREADS_ENV}: '{v}' is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

fn real_main() -> Result<bool, RunError> {
    let cli = match args::parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(CliError::Clap(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
        Err(CliError::Usage(m)) => return Err(RunError::Usage(m)),
    };
    let settings = Settings::from_args(&cli.global)?;
    if let Some(k) = threads(cli.global.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| RunError::Compute(format!("thread pool: {e}")))?;
    }
    let outcome = commands::run(&cli.command, &settings)?;
    match cli.global.output {
        OutputFormat::Human => print!("{}", outcome.human),
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&outcome.json).expect("reports serialise")),
        OutputFormat::Csv => {
            let text = outcome.table.to_csv().map_err(|e| RunError::Compute(format!("csv: {e}")))?;
            print!("{text}");
        }
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(RunError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
