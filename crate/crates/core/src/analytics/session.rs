use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::ingest::{AssociationEvent, EventKind};
use crate::registry::Registry;
use crate::Timestamp;

pub const DEFAULT_IDLE_TIMEOUT: i64 = 600;

/// A stitched interval `[start, end)` of one device's presence at one building.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeviceSession {
    pub device_id: Arc<str>,
    pub building_id: Arc<str>,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl DeviceSession {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}

/// Sessions keyed by device, each list time-ordered and pairwise disjoint.
pub type Sessions = BTreeMap<Arc<str>, Vec<DeviceSession>>;

struct Open {
    building: Arc<str>,
    start: Timestamp,
    last_seen: Timestamp,
}

/// Stitches association events into per-device building sessions.
///
/// Rules, per device:
/// - an event at the open session's building no more than `idle_timeout`
///   after the last one extends it;
/// - a disconnect at that building closes it at the disconnect time;
/// - any other event closes it at `min(last_seen + idle_timeout, ts)`;
/// - connects and polls open a new session when none is open, disconnects
///   never do;
/// - a session still open at the end of input closes at
///   `last_seen + idle_timeout`.
///
/// `events` must be in canonical stream order. Events whose AP is not in the
/// registry are ignored.
pub fn sessionize(events: &[AssociationEvent], registry: &Registry, idle_timeout: i64) -> Sessions {
    let building_of: HashMap<&str, Arc<str>> = registry
        .access_points()
        .map(|ap| (ap.id.as_str(), Arc::from(ap.building_id.as_str())))
        .collect();

    let mut open: HashMap<Arc<str>, Open> = HashMap::new();
    let mut out: Sessions = BTreeMap::new();

    let mut close = |device: &Arc<str>, o: Open, end: Timestamp| {
        out.entry(Arc::clone(device)).or_default().push(DeviceSession {
            device_id: Arc::clone(device),
            building_id: o.building,
            start: o.start,
            end,
        });
    };

    for ev in events {
        let Some(building) = building_of.get(&*ev.ap_id) else {
            continue;
        };
        if let Some(mut cur) = open.remove(&ev.device_id) {
            let same = cur.building == *building && ev.ts - cur.last_seen <= idle_timeout;
            if same {
                if ev.kind == EventKind::Disconnect {
                    close(&ev.device_id, cur, ev.ts);
                } else {
                    cur.last_seen = ev.ts;
                    open.insert(Arc::clone(&ev.device_id), cur);
                }
                continue;
            }
            let end = (cur.last_seen + idle_timeout).min(ev.ts);
            close(&ev.device_id, cur, end);
        }
        if ev.kind != EventKind::Disconnect {
            open.insert(
                Arc::clone(&ev.device_id),
                Open {
                    building: Arc::clone(building),
                    start: ev.ts,
                    last_seen: ev.ts,
                },
            );
        }
    }

    let mut remaining: Vec<_> = open.into_iter().collect();
    remaining.sort_by(|a, b| a.0.cmp(&b.0));
    for (device, cur) in remaining {
        let end = cur.last_seen + idle_timeout;
        close(&device, cur, end);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::tiny_registry;
    use proptest::prelude::*;

    fn ev(ts: i64, dev: &str, ap: &str, kind: EventKind) -> AssociationEvent {
        AssociationEvent::new(ts, dev, ap, kind)
    }

    fn spans(sessions: &Sessions, dev: &str) -> Vec<(String, i64, i64)> {
        sessions[dev]
            .iter()
            .map(|s| (s.building_id.to_string(), s.start, s.end))
            .collect()
    }

    #[test]
    fn lone_connect_times_out() {
        let s = sessionize(&[ev(0, "d", "AP-LIB-01", EventKind::Connect)], &tiny_registry(), 600);
        assert_eq!(spans(&s, "d"), [("LIB".into(), 0, 600)]);
    }

    #[test]
    fn explicit_disconnect_wins() {
        let events = [
            ev(0, "d", "AP-LIB-01", EventKind::Connect),
            ev(300, "d", "AP-LIB-02", EventKind::Poll),
            ev(500, "d", "AP-LIB-01", EventKind::Disconnect),
        ];
        let s = sessionize(&events, &tiny_registry(), 600);
        assert_eq!(spans(&s, "d"), [("LIB".into(), 0, 500)]);
    }

    #[test]
    fn connect_elsewhere_after_timeout() {
        let events = [
            ev(0, "d", "AP-LIB-01", EventKind::Connect),
            ev(900, "d", "AP-CANT-01", EventKind::Connect),
        ];
        let s = sessionize(&events, &tiny_registry(), 600);
        assert_eq!(spans(&s, "d"), [("LIB".into(), 0, 600), ("CANT".into(), 900, 1500)]);
    }

    #[test]
    fn connect_elsewhere_within_timeout_closes_at_arrival() {
        let events = [
            ev(0, "d", "AP-LIB-01", EventKind::Connect),
            ev(200, "d", "AP-CANT-01", EventKind::Connect),
        ];
        let s = sessionize(&events, &tiny_registry(), 600);
        assert_eq!(spans(&s, "d"), [("LIB".into(), 0, 200), ("CANT".into(), 200, 800)]);
    }

    #[test]
    fn same_building_gap_splits_session() {
        let events = [
            ev(0, "d", "AP-LIB-01", EventKind::Connect),
            ev(601, "d", "AP-LIB-01", EventKind::Poll),
        ];
        let s = sessionize(&events, &tiny_registry(), 600);
        assert_eq!(spans(&s, "d"), [("LIB".into(), 0, 600), ("LIB".into(), 601, 1201)]);
    }

    #[test]
    fn orphan_disconnect_opens_nothing() {
        let events = [
            ev(0, "d", "AP-LIB-01", EventKind::Disconnect),
            ev(10, "e", "AP-LIB-01", EventKind::Connect),
            ev(20, "e", "AP-CANT-01", EventKind::Disconnect),
        ];
        let s = sessionize(&events, &tiny_registry(), 600);
        assert!(!s.contains_key("d"));
        assert_eq!(spans(&s, "e"), [("LIB".into(), 10, 20)]);
    }

    #[test]
    fn empty_input() {
        assert!(sessionize(&[], &tiny_registry(), 600).is_empty());
    }

    proptest! {
        #[test]
        fn sessions_are_disjoint_ordered_and_witnessed(
            raw in prop::collection::vec(
                (0i64..20_000, 0usize..4, 0usize..6, 0usize..3), 0..200)
        ) {
            let aps = ["AP-CANT-01", "AP-DORM-01", "AP-ENG-01", "AP-GYM-01", "AP-LIB-01", "AP-LIB-02"];
            let kinds = [EventKind::Connect, EventKind::Poll, EventKind::Disconnect];
            let mut events: Vec<_> = raw
                .iter()
                .map(|&(ts, d, a, k)| ev(ts, &format!("d{d}"), aps[a], kinds[k]))
                .collect();
            events.sort();
            let reg = tiny_registry();
            let sessions = sessionize(&events, &reg, 600);
            for (dev, list) in &sessions {
                for s in list {
                    prop_assert!(s.end >= s.start);
                    let witnessed = events.iter().any(|e| {
                        e.device_id == *dev
                            && reg.building_of_ap(&e.ap_id).unwrap().id == *s.building_id
                            && s.start <= e.ts && e.ts <= s.end
                    });
                    prop_assert!(witnessed);
                }
                for w in list.windows(2) {
                    prop_assert!(w[0].end <= w[1].start);
                }
            }
        }
    }
}
