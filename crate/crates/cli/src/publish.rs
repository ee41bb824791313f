use std::sync::Arc;

use anyhow::Context;
use axum::extract::ws::Utf8Bytes;
use pulse_core::{build_display_payload, PayloadParams, SnapshotIndex, Timestamp};

use crate::envelope::PayloadEnvelope;

/// One rendered refresh: the serialized envelope plus the index it came from.
///
/// Values are immutable once built and shared by `Arc`, so a reader holding
/// one never sees a mix of two refreshes.
#[derive(Debug)]
pub struct Published {
    pub virtual_now: Timestamp,
    pub json: Utf8Bytes,
    pub index: Arc<SnapshotIndex>,
}

#[derive(Debug, Clone)]
pub struct Renderer {
    pub index: Arc<SnapshotIndex>,
    pub params: PayloadParams,
}

impl Renderer {
    pub fn new(index: SnapshotIndex, params: PayloadParams) -> Self {
        Self {
            index: Arc::new(index),
            params,
        }
    }

    pub fn envelope(&self, at: Timestamp) -> anyhow::Result<PayloadEnvelope> {
        let snapshot = self.index.snapshot(at).with_context(|| format!("snapshot at {at}"))?;
        let payload = build_display_payload(&snapshot, self.index.registry(), &self.params)
            .with_context(|| format!("payload at {at}"))?;
        Ok(PayloadEnvelope::new(payload, at))
    }

    pub fn render(&self, at: Timestamp) -> anyhow::Result<Published> {
        let json = serde_json::to_string(&self.envelope(at)?).context("serializing envelope")?;
        Ok(Published {
            virtual_now: at,
            json: json.into(),
            index: Arc::clone(&self.index),
        })
    }
}

/// Virtual instants of a replay: `first + k * refresh` for every `k >= 0`
/// up to and including `last`.
pub fn replay_ticks(first: Timestamp, last: Timestamp, refresh: i64) -> impl Iterator<Item = Timestamp> {
    assert!(refresh >= 1, "refresh must be positive");
    let steps = if last < first { 0 } else { (last - first) / refresh + 1 };
    (0..steps).map(move |k| first + k * refresh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_the_log() {
        assert_eq!(replay_ticks(0, 180, 60).collect::<Vec<_>>(), [0, 60, 120, 180]);
        assert_eq!(replay_ticks(0, 179, 60).collect::<Vec<_>>(), [0, 60, 120]);
        assert_eq!(replay_ticks(5, 5, 60).collect::<Vec<_>>(), [5]);
        assert_eq!(replay_ticks(5, 4, 60).count(), 0);
        assert_eq!(replay_ticks(0, 86_399, 60).count(), 1440);
    }
}
