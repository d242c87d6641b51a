//! `selberg-fuchs`: Selberg-type integrals, order statistics, moments,
//! characteristic polynomials and monodromy from the command line.

mod args;
mod commands;
mod error;
mod job;
mod output;

use std::process::ExitCode;

use error::{invalid, CliError, CliResult};

/// Size of the worker pool; unset means one thread per core.
const THREADS_VAR: &str = "SELBERG_FUCHS_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| invalid(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| invalid(format!("{THREADS_VAR}: {e}")))
}

fn run() -> CliResult<()> {
    let matches = match args::cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_threads()?;
    let (command, opts) = args::resolve(&matches)?;
    let mut job = job::Job::new(command, opts)?;
    commands::run(&mut job)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Numerical(inner) => eprintln!("error[{}]: {inner}", inner.kind()),
                CliError::ChecksFailed { .. } => eprintln!("{e}"),
                _ => eprintln!("error: {e}"),
            }
            e.exit_code()
        }
    }
}
