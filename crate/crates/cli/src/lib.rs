//! The `cluefuse` command-line pipeline: index a corpus, retrieve with
//! filtered clue expansion and fusion, evaluate runs, and time the whole
//! path.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod config;
pub mod pipeline;

use std::ffi::OsString;

use clap::Parser;

use cli::{Cli, Command};
use config::{PipelineConfig, UsageError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `args`, runs the subcommand, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    match cli.command {
        Command::Index(a) => commands::index(cfg, a),
        Command::Retrieve(a) => commands::retrieve(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Bench(a) => commands::bench(cfg, a),
    }
}
