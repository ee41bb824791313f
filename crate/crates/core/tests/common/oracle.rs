//! Brute-force reference computations, written against the raw event
//! stream rather than against stitched sessions.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use pulse_core::ingest::{AssociationEvent, EventKind};
use pulse_core::Registry;

pub fn by_device(events: &[AssociationEvent]) -> BTreeMap<&str, Vec<&AssociationEvent>> {
    let mut out: BTreeMap<&str, Vec<&AssociationEvent>> = BTreeMap::new();
    for e in events {
        out.entry(&*e.device_id).or_default().push(e);
    }
    out
}

/// Where a device is at `t`: the building of its latest event at or before
/// `t`, provided that event is not a disconnect and is less than
/// `idle_timeout` old.
pub fn presence<'a>(
    events: &[&AssociationEvent],
    registry: &'a Registry,
    t: i64,
    idle_timeout: i64,
) -> Option<&'a str> {
    let last = events.iter().rev().find(|e| e.ts <= t)?;
    if last.kind == EventKind::Disconnect || t >= last.ts + idle_timeout {
        return None;
    }
    registry.building_of_ap(&last.ap_id).map(|b| b.id.as_str())
}

pub fn occupancy(events: &[AssociationEvent], registry: &Registry, t: i64, idle_timeout: i64) -> BTreeMap<String, u32> {
    let mut counts: BTreeMap<String, u32> = registry.buildings().map(|b| (b.id.clone(), 0)).collect();
    for evs in by_device(events).values() {
        if let Some(b) = presence(evs, registry, t, idle_timeout) {
            *counts.get_mut(b).unwrap() += 1;
        }
    }
    counts
}

/// Presence intervals rebuilt from per-event coverage: each non-disconnect
/// event covers `[ts, min(ts + timeout, next ts))`; touching intervals at
/// the same building merge. Requires strictly increasing times per device.
pub fn visits(events: &[&AssociationEvent], registry: &Registry, idle_timeout: i64) -> Vec<(String, i64, i64)> {
    let mut out: Vec<(String, i64, i64)> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.kind == EventKind::Disconnect {
            continue;
        }
        let Some(b) = registry.building_of_ap(&e.ap_id) else {
            continue;
        };
        let mut end = e.ts + idle_timeout;
        if let Some(next) = events.get(i + 1) {
            end = end.min(next.ts);
        }
        match out.last_mut() {
            Some(last) if last.0 == b.id && last.2 == e.ts => last.2 = end,
            _ => out.push((b.id.clone(), e.ts, end)),
        }
    }
    out
}

pub fn movement(
    events: &[AssociationEvent],
    registry: &Registry,
    window: (i64, i64),
    idle_timeout: i64,
    gap_max: i64,
) -> BTreeMap<(String, String), u64> {
    let mut counts = BTreeMap::new();
    for evs in by_device(events).values() {
        let v = visits(evs, registry, idle_timeout);
        for i in 0..v.len().saturating_sub(1) {
            let (a, b) = (&v[i], &v[i + 1]);
            let gap = b.1 - a.2;
            if a.0 != b.0 && gap >= 0 && gap <= gap_max && b.1 >= window.0 && b.1 < window.1 {
                *counts.entry((a.0.clone(), b.0.clone())).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Row and column sums of a building matrix: (incoming, outgoing).
pub fn flux(matrix: &BTreeMap<(String, String), u64>) -> (HashMap<String, u64>, HashMap<String, u64>) {
    let (mut inc, mut out) = (HashMap::new(), HashMap::new());
    for ((f, t), &n) in matrix {
        *out.entry(f.clone()).or_insert(0) += n;
        *inc.entry(t.clone()).or_insert(0) += n;
    }
    (inc, out)
}
