//! The `pulse` daemon and command-line tools.
//!
//! `gen` writes a synthetic association log, `analyze` prints one snapshot,
//! and `serve` drives a clock over a log and publishes display payloads over
//! HTTP and a websocket stream.

pub mod args;
pub mod commands;
pub mod envelope;
pub mod live;
pub mod publish;
pub mod server;

pub use envelope::{PayloadEnvelope, SCHEMA_VERSION};
pub use publish::{replay_ticks, Published, Renderer};
pub use server::{router, AppState, ServeConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
}

/// A command failure, split by whose fault it is.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments: exit 2.
    Usage(String),
    /// Everything else: exit 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => exit::USAGE,
            Failure::Runtime(_) => exit::FAILURE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Runtime(err)
    }
}
