//! Command-line front end for `koopspec`.
//!
//! Subcommands: `simulate`, `analyze`, `yosida` and `map`. Each one is a
//! plain function over its parsed arguments so tests can drive them without
//! spawning a process.

pub mod analyze;
pub mod args;
pub mod map;
pub mod output;
pub mod simulate;
pub mod yosida;

use thiserror::Error;

pub use analyze::{cmd_analyze, AnalysisReport};
pub use args::{Cli, Command};
pub use map::cmd_map;
pub use simulate::cmd_simulate;
pub use yosida::cmd_yosida;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<koopspec::Error> for CliError {
    fn from(e: koopspec::Error) -> Self {
        use koopspec::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidInput(_) => CliError::Usage(msg),
            E::Parse { .. } | E::Header { .. } => CliError::Parse(msg),
            E::Degenerate(_) | E::NoConvergence { .. } | E::Divergence { .. } => {
                CliError::Numerical(msg)
            }
            E::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Runs one parsed invocation. `--threads` is applied by the caller.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Analyze(a) => cmd_analyze(&a).map(|_| ()),
        Command::Yosida(a) => cmd_yosida(&a),
        Command::Map(a) => cmd_map(&a).map(|_| ()),
    }
}

/// Caps the global rayon pool. Only the first call in a process has effect.
pub fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A pool already built by an earlier call is fine to keep.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
