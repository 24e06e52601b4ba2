//! `grg`: build indexes, train the quality filter, execute run presets and
//! score the results.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 provider failure.

mod args;
mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use grg_core::embedding::EmbedError;
use grg_core::genai::GenAiError;
use grg_core::pipeline::PipelineError;

use args::{Cli, Command};
use config::{env_layer, process_env, ConfigFile};

fn is_provider_failure(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            e.is_provider_failure()
        } else if let Some(e) = cause.downcast_ref::<GenAiError>() {
            e.is_provider_failure()
        } else {
            matches!(cause.downcast_ref::<EmbedError>(), Some(EmbedError::Transport(_) | EmbedError::Status(_)))
        }
    })
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    match cli.command {
        Command::Index(a) => commands::index(a.or(file.index), &mut out),
        Command::TrainFilter(a) => commands::train_filter(a.or(file.train_filter), &mut out),
        Command::Run(a) => commands::run(a.or(env_layer(process_env)).or(file.run), &mut out, &mut err),
        Command::Eval(a) => commands::eval(a.or(file.eval), &mut out, &mut err),
        Command::Compare(a) => commands::compare(a.or(file.compare), &mut out),
        Command::Trace(a) => commands::trace(a.or(file.trace), &mut out, &mut err),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::FAILURE,
            };
        }
    };
    let name = cli.command.name();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "grg {name}: error: {e:#}");
            if is_provider_failure(&e) {
                ExitCode::from(commands::PROVIDER_FAILURE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
