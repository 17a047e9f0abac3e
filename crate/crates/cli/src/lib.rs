//! Library side of the `pdem-cs` binary: configuration, commands, output.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or parameters.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error(transparent)]
    Core(#[from] pdem_coherent::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_usage() => EXIT_USAGE,
            _ => EXIT_FAILED,
        }
    }
}

/// Run one parsed invocation and return the process exit code.
pub fn execute(cli: config::Cli) -> i32 {
    let (kind, args) = cli.command.split();
    let result = config::RunConfig::from_cli(kind, &args).and_then(|cfg| {
        if args.print_config {
            output::emit(cfg.canonical().as_bytes(), None)?;
            return Ok(EXIT_OK);
        }
        let out = commands::run(&cfg)?;
        let bytes = output::render(&out, cfg.format())?;
        output::emit(&bytes, cfg.out.as_deref())?;
        Ok(if out.failed { EXIT_FAILED } else { EXIT_OK })
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pdem-cs: {e}");
            e.exit_code()
        }
    }
}
