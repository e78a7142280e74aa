//! `qinterp` command-line tool and HTTP service.

pub mod args;
pub mod commands;
pub mod report;
pub mod server;

use std::io::IsTerminal;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use qinterp_core::Error;

use args::{Cli, Command};

/// Exit status and label for a failure.
fn category(err: &anyhow::Error) -> (u8, &'static str) {
    let Some(core) = err.chain().find_map(|e| e.downcast_ref::<Error>()) else {
        return if err.chain().any(|e| e.is::<std::io::Error>()) { (4, "io") } else { (1, "error") };
    };
    match core {
        Error::InvalidConfig(_) => (2, "config"),
        Error::EmptyQuery | Error::QueryTooLong { .. } | Error::EmptySurface => (3, "query"),
        Error::Malformed { .. }
        | Error::DimensionMismatch { .. }
        | Error::ConflictingAnchor { .. }
        | Error::ConflictingNgram { .. }
        | Error::InvalidEntityId(_)
        | Error::InvalidEmbedding(_)
        | Error::Schema { .. }
        | Error::Json(_) => (3, "input"),
        Error::UnknownQuery(_) | Error::EmptyRun | Error::UnknownAnchor(_) => (3, "evaluation"),
        Error::Snapshot { .. } | Error::Io(_) | Error::Codec(_) => (4, "io"),
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let pretty = cli.pretty;
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a, pretty),
        Command::Segment(a) => commands::segment(&a, pretty),
        Command::Link(a) => commands::link(&a, pretty),
        Command::Interpret(a) => commands::interpret_cmd(&a, pretty),
        Command::Evaluate(a) => commands::evaluate(&a, pretty),
        Command::Split(a) => commands::split(&a, pretty),
        Command::Bench(a) => commands::bench(&a, pretty),
        Command::Serve(a) => {
            let config = a.engine.config()?;
            let kb = commands::load_kb(&a.engine.kb)?;
            let state = Arc::new(server::AppState { kb, config });
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?
                .block_on(server::serve(state, a.address))
        }
    }
}

pub fn run() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, label) = category(&err);
            eprintln!("error[{label}]: {err:#}");
            ExitCode::from(code)
        }
    }
}
