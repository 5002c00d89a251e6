/// `print!` that exits quietly when stdout is closed (e.g. piped into `head`).
macro_rules! out {
    ($($t:tt)*) => { $crate::emit(&format!($($t)*)) };
}

macro_rules! outln {
    () => { $crate::emit("\n") };
    ($($t:tt)*) => { $crate::emit(&(format!($($t)*) + "\n")) };
}

mod args;
mod bench;
mod files;
mod report;
mod table;
mod train;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Exit status 1: the request was rejected before doing any work.
/// Exit status 2: the work itself failed.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub type CliResult = Result<(), CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing output: {e}");
        std::process::exit(2);
    }
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn print_json(value: &impl serde::Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    outln!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            out!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Keygen { bits, out, common } => files::keygen(bits, &out, &common),
        Command::Encrypt { key, input, out, workers, common } => files::encrypt(&key, &input, &out, workers, &common),
        Command::Decrypt { key, input, out, workers, common } => files::decrypt(&key, &input, &out, workers, &common),
        Command::BenchModmult { bits, word_size, iters, common } => bench::modmult(bits, word_size, iters, &common),
        Command::BenchPaillier { bits, ops, workers, batch_size, common } => {
            bench::paillier(bits, ops, workers, batch_size, &common)
        }
        Command::ModelReport { config, common } => report::model_report(config.as_deref(), &common),
        Command::TrainDemo { .. } => train::train_demo(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
