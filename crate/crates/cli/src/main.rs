mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use crate::config::{Cli, Format};
use crate::table::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nmspdc::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(nmspdc::Error::Domain(_)) => 2,
            CliError::Core(_) => 3,
            _ => 1,
        }
    }
}

/// What a subcommand produces: a table, or a JSON document with a table
/// fallback for CSV output.
pub enum Output {
    Table(Table),
    Document { json: Value, table: Table },
}

fn emit(output: Output, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    match (output, format) {
        (Output::Table(t) | Output::Document { table: t, .. }, Format::Csv) => t.write_csv(out)?,
        (Output::Table(t), Format::Json) => {
            serde_json::to_writer_pretty(&mut *out, &t.to_json())?;
            writeln!(out)?;
        }
        (Output::Document { json, .. }, Format::Json) => {
            serde_json::to_writer_pretty(&mut *out, &json)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.validate()?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let output = commands::execute(&cli.command, &config)?;
    let format = config.format.unwrap_or(match output {
        Output::Document { .. } => Format::Json,
        Output::Table(_) => Format::Csv,
    });
    match &config.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            emit(output, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            emit(output, format, &mut w)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmspdc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
