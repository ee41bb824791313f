use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;

use anyhow::Context;
use pulse_core::{
    build_snapshot, generate, load_registry, read_log, write_log, EventStream, Registry, SimConfig, SnapshotParams,
};
use tracing::{info, warn};

use crate::args::{AnalyzeArgs, GenArgs};
use crate::Failure;

pub fn load_registry_file(path: &Path) -> anyhow::Result<Registry> {
    load_registry(path).with_context(|| format!("loading registry {}", path.display()))
}

pub fn load_log(path: &Path, registry: &Registry) -> anyhow::Result<EventStream> {
    let file = File::open(path).with_context(|| format!("opening log {}", path.display()))?;
    let stream = read_log(BufReader::with_capacity(1 << 20, file), registry)
        .with_context(|| format!("reading log {}", path.display()))?;
    if stream.skipped_malformed + stream.skipped_unknown_ap > 0 {
        warn!(
            malformed = stream.skipped_malformed,
            unknown_ap = stream.skipped_unknown_ap,
            "skipped log records"
        );
    }
    info!(events = stream.len(), "log loaded");
    Ok(stream)
}

pub fn gen(args: &GenArgs) -> Result<(), Failure> {
    let registry = load_registry_file(&args.registry)?;
    let mut config = SimConfig::new(args.devices, args.days, args.seed);
    if let Some(start) = args.start {
        config.start_ts = start;
    }
    let stream = generate(&config, &registry).map_err(|e| Failure::Usage(e.to_string()))?;
    write_log(&stream, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    info!(events = stream.len(), out = %args.out.display(), "log written");
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs, out: &mut impl Write) -> Result<(), Failure> {
    let registry = load_registry_file(&args.registry)?;
    let stream = load_log(&args.log, &registry)?;
    let snapshot =
        build_snapshot(&stream, &registry, args.at, &SnapshotParams::default()).context("building snapshot")?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        if args.pretty {
            serde_json::to_writer_pretty(&mut *out, &snapshot)?;
        } else {
            serde_json::to_writer(&mut *out, &snapshot)?;
        }
        out.write_all(b"\n")?;
        out.flush()
    };
    write(out).context("writing snapshot")?;
    Ok(())
}
