use std::io;
use std::process::ExitCode;

use clap::Parser;
use pulse_cli::args::{Cli, Command};
use pulse_cli::server::{self, ServeConfig};
use pulse_cli::{commands, Failure};
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) {
        "info"
    } else {
        "warn"
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default_level)))
        .with_writer(io::stderr)
        .init();

    let result = match &cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Analyze(args) => commands::analyze(args, &mut io::stdout().lock()),
        Command::Serve(args) => tokio::runtime::Runtime::new()
            .map_err(|e| Failure::Runtime(e.into()))
            .and_then(|rt| rt.block_on(server::run(ServeConfig::from_args(args)))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("pulse: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
