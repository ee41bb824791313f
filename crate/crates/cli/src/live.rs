//! Live mode: tail a growing log and refresh on the wall clock.

use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use pulse_core::ingest::{parse_event_line, Watermark};
use pulse_core::{AssociationEvent, EventStream, PayloadParams, Registry, SnapshotIndex, SnapshotParams, Timestamp};
use tracing::{error, info, warn};

use crate::publish::{Published, Renderer};
use crate::server::AppState;

/// Events more than this far behind the newest one seen are dropped.
pub const MAX_LATENESS: i64 = 300;

pub struct LiveFeed {
    path: PathBuf,
    registry: Registry,
    snapshot: SnapshotParams,
    payload: PayloadParams,
    stream: EventStream,
    offset: u64,
    partial: Vec<u8>,
    watermark: Watermark,
}

impl LiveFeed {
    pub fn open(
        path: &Path,
        registry: Registry,
        snapshot: SnapshotParams,
        payload: PayloadParams,
    ) -> anyhow::Result<Self> {
        let mut feed = Self {
            path: path.to_path_buf(),
            registry,
            snapshot,
            payload,
            stream: EventStream::default(),
            offset: 0,
            partial: Vec::new(),
            watermark: Watermark::new(MAX_LATENESS),
        };
        let n = feed.poll().with_context(|| format!("reading log {}", path.display()))?;
        info!(events = n, "log loaded");
        Ok(feed)
    }

    pub fn stream(&self) -> &EventStream {
        &self.stream
    }

    /// Reads whatever complete lines were appended since the last call and
    /// returns how many events were admitted. Each batch is sorted before it
    /// meets the watermark, so disorder within one batch is always tolerated.
    pub fn poll(&mut self) -> io::Result<usize> {
        let mut file = File::open(&self.path)?;
        let len = file.metadata()?.len();
        if len < self.offset {
            warn!(path = %self.path.display(), "log shrank, reading from the start");
            self.offset = 0;
            self.partial.clear();
        }
        file.seek(SeekFrom::Start(self.offset))?;
        let mut buf = std::mem::take(&mut self.partial);
        let read = file.take(len - self.offset).read_to_end(&mut buf)?;
        self.offset += read as u64;

        let complete = buf.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        self.partial = buf.split_off(complete);

        let mut batch: Vec<AssociationEvent> = Vec::new();
        for line in buf.split(|&b| b == b'\n') {
            let Ok(line) = std::str::from_utf8(line) else {
                self.stream.skipped_malformed += 1;
                continue;
            };
            if line.trim().is_empty() {
                continue;
            }
            match parse_event_line(line) {
                Err(_) => self.stream.skipped_malformed += 1,
                Ok(e) if self.registry.access_point(&e.ap_id).is_none() => self.stream.skipped_unknown_ap += 1,
                Ok(e) => batch.push(e),
            }
        }
        batch.sort_unstable();
        let before = self.watermark.dropped;
        batch.retain(|e| self.watermark.admit(e));
        self.stream.skipped_late += self.watermark.dropped - before;
        let admitted = batch.len();
        self.stream.extend(batch);
        Ok(admitted)
    }

    pub fn render(&self, now: Timestamp) -> anyhow::Result<Published> {
        let index = SnapshotIndex::build(&self.stream, &self.registry, &self.snapshot)?;
        Renderer::new(index, self.payload.clone()).render(now)
    }

    /// Refreshes forever on the wall clock.
    pub fn run(&mut self, state: &AppState, refresh: Duration) {
        loop {
            let started = std::time::Instant::now();
            if let Err(e) = self.poll() {
                warn!("tailing {}: {e}", self.path.display());
            }
            match self.render(wall_now()) {
                Ok(p) => {
                    state.publish(p);
                }
                Err(e) => error!("{e:#}"),
            }
            std::thread::sleep(refresh.saturating_sub(started.elapsed()));
        }
    }
}

pub fn wall_now() -> Timestamp {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as Timestamp)
}
