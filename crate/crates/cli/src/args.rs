use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pulse_core::Timestamp;

#[derive(Debug, Parser)]
#[command(
    name = "pulse",
    version,
    about = "Campus crowd analytics from Wi-Fi association logs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic association log.
    Gen(GenArgs),
    /// Print the snapshot at one instant as JSON.
    Analyze(AnalyzeArgs),
    /// Serve display payloads over HTTP and a websocket stream.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub devices: u32,
    #[arg(long)]
    pub days: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// First simulated midnight (unix seconds or RFC 3339).
    #[arg(long, value_parser = parse_timestamp)]
    pub start: Option<Timestamp>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    /// Unix seconds or an RFC 3339 UTC time such as 2019-04-03T13:00:00Z.
    #[arg(long, value_parser = parse_timestamp)]
    pub at: Timestamp,
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub log: PathBuf,
    /// Replay the log on a virtual clock instead of tailing it live.
    #[arg(long)]
    pub replay: bool,
    /// Virtual seconds per wall second (replay only).
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Virtual seconds between snapshots.
    #[arg(long, default_value_t = 60)]
    pub refresh: i64,
    #[arg(long, env = "PULSE_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "0.0.0.0")]
    pub bind: String,
    /// Hold the replay clock until the first stream subscriber connects.
    #[arg(long)]
    pub await_subscriber: bool,
}

pub fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    let s = s.trim();
    if let Ok(ts) = s.parse::<Timestamp>() {
        return Ok(ts);
    }
    let t = humantime::parse_rfc3339_weak(s).map_err(|e| format!("not unix seconds or RFC 3339: {e}"))?;
    let secs = t
        .duration_since(std::time::UNIX_EPOCH)
        .map_err(|_| "times before 1970 are not supported".to_string())?
        .as_secs();
    Timestamp::try_from(secs).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp("1554076800"), Ok(1_554_076_800));
        assert_eq!(parse_timestamp("2019-04-01T00:00:00Z"), Ok(1_554_076_800));
        assert_eq!(parse_timestamp("2019-04-01 13:00:00"), Ok(1_554_076_800 + 13 * 3600));
        assert!(parse_timestamp("yesterday").is_err());
        assert!(parse_timestamp("").is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
