//! Association log parsing.
//!
//! The log is newline-delimited JSON, one record per line:
//!
//! ```text
//! {"ts":1554105600,"dev":"a1b2","ap":"AP-LIB-01","ev":"connect"}
//! ```
//!
//! `dev` is an opaque, already-hashed device token. Records that fail to parse
//! and records for access points outside the registry are counted and
//! skipped; only I/O failures abort a read.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;
use crate::Timestamp;

/// Events older than the watermark by more than this are dropped in live mode.
pub const DEFAULT_MAX_LATENESS: i64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Connect,
    Poll,
    Disconnect,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Connect => "connect",
            EventKind::Poll => "poll",
            EventKind::Disconnect => "disconnect",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "connect" => Some(EventKind::Connect),
            "poll" => Some(EventKind::Poll),
            "disconnect" => Some(EventKind::Disconnect),
            _ => None,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One device ↔ access point log record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssociationEvent {
    pub ts: Timestamp,
    pub device_id: Arc<str>,
    pub ap_id: Arc<str>,
    pub kind: EventKind,
}

impl AssociationEvent {
    pub fn new(ts: Timestamp, device_id: &str, ap_id: &str, kind: EventKind) -> Self {
        Self {
            ts,
            device_id: Arc::from(device_id),
            ap_id: Arc::from(ap_id),
            kind,
        }
    }

    fn sort_key(&self) -> (Timestamp, &str, &str, EventKind) {
        (self.ts, &self.device_id, &self.ap_id, self.kind)
    }
}

impl PartialOrd for AssociationEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AssociationEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed log line: {0}")]
    MalformedLine(String),
}

#[derive(Deserialize)]
struct RawRecord<'a> {
    ts: i64,
    #[serde(borrow)]
    dev: Cow<'a, str>,
    #[serde(borrow)]
    ap: Cow<'a, str>,
    #[serde(borrow)]
    ev: Cow<'a, str>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    ts: Timestamp,
    dev: &'a str,
    ap: &'a str,
    ev: &'a str,
}

fn parse_raw(line: &str) -> Result<RawRecord<'_>, IngestError> {
    let raw: RawRecord<'_> = serde_json::from_str(line).map_err(|e| IngestError::MalformedLine(e.to_string()))?;
    if raw.ts < 0 {
        return Err(IngestError::MalformedLine(format!("negative ts {}", raw.ts)));
    }
    if raw.dev.is_empty() {
        return Err(IngestError::MalformedLine("empty dev".into()));
    }
    if raw.ap.is_empty() {
        return Err(IngestError::MalformedLine("empty ap".into()));
    }
    if EventKind::parse(&raw.ev).is_none() {
        return Err(IngestError::MalformedLine(format!("unknown ev {:?}", raw.ev)));
    }
    Ok(raw)
}

pub fn parse_event_line(line: &str) -> Result<AssociationEvent, IngestError> {
    let raw = parse_raw(line.trim())?;
    Ok(AssociationEvent {
        ts: raw.ts,
        device_id: Arc::from(raw.dev.as_ref()),
        ap_id: Arc::from(raw.ap.as_ref()),
        kind: EventKind::parse(&raw.ev).expect("checked in parse_raw"),
    })
}

pub fn format_event_line(event: &AssociationEvent) -> String {
    serde_json::to_string(&OutRecord {
        ts: event.ts,
        dev: &event.device_id,
        ap: &event.ap_id,
        ev: event.kind.as_str(),
    })
    .expect("event serializes")
}

/// Deduplicates the device and AP strings of a large log.
#[derive(Default)]
struct Interner(HashSet<Arc<str>>);

impl Interner {
    fn intern(&mut self, s: &str) -> Arc<str> {
        if let Some(existing) = self.0.get(s) {
            return Arc::clone(existing);
        }
        let arc: Arc<str> = Arc::from(s);
        self.0.insert(Arc::clone(&arc));
        arc
    }
}

/// Time-ordered events plus the counters of what was skipped on the way in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<AssociationEvent>,
    pub skipped_unknown_ap: u64,
    pub skipped_malformed: u64,
    pub skipped_late: u64,
}

impl EventStream {
    /// Sorts `events` into the canonical (ts, device, ap, kind) order.
    pub fn from_events(mut events: Vec<AssociationEvent>) -> Self {
        events.sort_unstable();
        Self {
            events,
            ..Self::default()
        }
    }

    pub fn events(&self) -> &[AssociationEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<AssociationEvent> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_ts(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.ts)
    }

    pub fn last_ts(&self) -> Option<Timestamp> {
        self.events.last().map(|e| e.ts)
    }

    /// Events with `ts <= at`: everything a live system would know at `at`.
    pub fn known_at(&self, at: Timestamp) -> &[AssociationEvent] {
        let end = self.events.partition_point(|e| e.ts <= at);
        &self.events[..end]
    }

    /// Appends events that are already in order relative to the existing tail
    /// (live tailing). Falls back to a full sort when they are not.
    pub fn extend(&mut self, more: impl IntoIterator<Item = AssociationEvent>) {
        let before = self.events.len();
        self.events.extend(more);
        let sorted = self.events[before.saturating_sub(1)..].windows(2).all(|w| w[0] <= w[1]);
        if !sorted {
            self.events.sort_unstable();
        }
    }
}

/// Reads a whole log, keeping well-formed records whose AP is registered.
pub fn read_log<R: BufRead>(mut source: R, registry: &Registry) -> io::Result<EventStream> {
    let mut stream = EventStream::default();
    let mut interner = Interner::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let Ok(line) = std::str::from_utf8(&buf) else {
            stream.skipped_malformed += 1;
            continue;
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_raw(line) {
            Err(_) => stream.skipped_malformed += 1,
            Ok(raw) => {
                if registry.access_point(&raw.ap).is_none() {
                    stream.skipped_unknown_ap += 1;
                    continue;
                }
                stream.events.push(AssociationEvent {
                    ts: raw.ts,
                    device_id: interner.intern(&raw.dev),
                    ap_id: interner.intern(&raw.ap),
                    kind: EventKind::parse(&raw.ev).expect("checked in parse_raw"),
                });
            }
        }
    }
    stream.events.sort_unstable();
    Ok(stream)
}

/// Writes `events` in canonical order, one record per line.
pub fn write_log_to<W: Write>(events: &[AssociationEvent], mut out: W) -> io::Result<()> {
    let sorted_already = events.windows(2).all(|w| w[0] <= w[1]);
    let mut owned;
    let events = if sorted_already {
        events
    } else {
        owned = events.to_vec();
        owned.sort_unstable();
        &owned[..]
    };
    for event in events {
        serde_json::to_writer(
            &mut out,
            &OutRecord {
                ts: event.ts,
                dev: &event.device_id,
                ap: &event.ap_id,
                ev: event.kind.as_str(),
            },
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Out-of-order guard for live tailing: tracks the highest timestamp seen and
/// rejects events that arrive more than `max_lateness` seconds behind it.
#[derive(Debug, Clone)]
pub struct Watermark {
    max_lateness: i64,
    high: Option<Timestamp>,
    pub dropped: u64,
}

impl Watermark {
    pub fn new(max_lateness: i64) -> Self {
        Self {
            max_lateness,
            high: None,
            dropped: 0,
        }
    }

    pub fn current(&self) -> Option<Timestamp> {
        self.high
    }

    pub fn admit(&mut self, event: &AssociationEvent) -> bool {
        match self.high {
            Some(high) if event.ts < high - self.max_lateness => {
                self.dropped += 1;
                false
            }
            Some(high) => {
                self.high = Some(high.max(event.ts));
                true
            }
            None => {
                self.high = Some(event.ts);
                true
            }
        }
    }
}

impl Default for Watermark {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_LATENESS)
    }
}
