//! Deterministic synthetic association logs.
//!
//! Each simulated device is one person following a fixed daily routine:
//!
//! | time          | place                                            |
//! |---------------|--------------------------------------------------|
//! | until ~08:30  | home dormitory                                   |
//! | 09:00–12:00   | academic buildings, 1–2 h blocks                 |
//! | 12:00–13:00   | a canteen with p = 0.8, otherwise another block  |
//! | 13:00–17:00   | academic buildings, 1–2 h blocks                 |
//! | ~18:30–~21:30 | the library with p = 0.4                         |
//! | evening on    | home dormitory                                   |
//!
//! On every visit the device connects on arrival, polls every 300 s ± 60 s,
//! and disconnects on departure. All randomness comes from a ChaCha stream
//! per device, so output is a pure function of the config and registry.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{write_log_to, AssociationEvent, EventKind, EventStream};
use crate::registry::{Category, Registry};
use crate::{Timestamp, DAY, HOUR};

/// 2019-04-01 00:00:00 UTC, a Monday.
pub const DEFAULT_START_TS: Timestamp = 1_554_076_800;

pub const POLL_INTERVAL: i64 = 300;
pub const POLL_JITTER: i64 = 60;

const MINUTE: i64 = 60;
const CANTEEN_PROBABILITY: f64 = 0.8;
const LIBRARY_PROBABILITY: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub devices: u32,
    pub days: u32,
    pub seed: u64,
    pub start_ts: Timestamp,
}

impl SimConfig {
    pub fn new(devices: u32, days: u32, seed: u64) -> Self {
        Self {
            devices,
            days,
            seed,
            start_ts: DEFAULT_START_TS,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
}

struct Places<'r> {
    dormitory: Vec<&'r str>,
    academic: Vec<&'r str>,
    canteen: Vec<&'r str>,
    library: Vec<&'r str>,
}

impl<'r> Places<'r> {
    fn from_registry(registry: &'r Registry) -> Result<Self, SimError> {
        // Only buildings with at least one AP can produce events.
        let of = |cat: Category| -> Vec<&'r str> {
            registry
                .buildings()
                .filter(|b| b.category == cat && registry.aps_in(&b.id).next().is_some())
                .map(|b| b.id.as_str())
                .collect()
        };
        let places = Self {
            dormitory: of(Category::Dormitory),
            academic: of(Category::Academic),
            canteen: of(Category::Canteen),
            library: of(Category::Library),
        };
        let missing: Vec<&str> = [
            ("dormitory", &places.dormitory),
            ("academic", &places.academic),
            ("canteen", &places.canteen),
            ("library", &places.library),
        ]
        .into_iter()
        .filter(|(_, v)| v.is_empty())
        .map(|(name, _)| name)
        .collect();
        if missing.is_empty() {
            Ok(places)
        } else {
            Err(SimError::Config(format!(
                "registry has no building with an access point for: {}",
                missing.join(", ")
            )))
        }
    }
}

struct Visit<'r> {
    building: &'r str,
    arrive: Timestamp,
    depart: Timestamp,
    /// Still present when the simulation ends; no disconnect is emitted.
    open: bool,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn transit(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(2 * MINUTE..=10 * MINUTE)
}

/// Fills `[t, until)` with academic blocks; returns when the next visit may start.
fn academic_blocks<'r>(
    rng: &mut ChaCha8Rng,
    places: &Places<'r>,
    mut t: Timestamp,
    until: Timestamp,
    visits: &mut Vec<Visit<'r>>,
) -> Timestamp {
    while t < until - 15 * MINUTE {
        let end = (t + rng.gen_range(HOUR..=2 * HOUR)).min(until);
        visits.push(Visit {
            building: places.academic.choose(rng).expect("non-empty"),
            arrive: t,
            depart: end,
            open: false,
        });
        t = end + transit(rng);
    }
    t
}

fn plan_device<'r>(rng: &mut ChaCha8Rng, places: &Places<'r>, config: &SimConfig) -> Vec<Visit<'r>> {
    let home = *places.dormitory.choose(rng).expect("non-empty");
    let library = *places.library.choose(rng).expect("non-empty");
    let sim_end = config.start_ts + i64::from(config.days) * DAY;

    let mut visits = Vec::new();
    let mut home_since = config.start_ts + rng.gen_range(0..POLL_INTERVAL);
    for day in 0..i64::from(config.days) {
        let d0 = config.start_ts + day * DAY;
        let leave = d0 + 8 * HOUR + rng.gen_range(0..50 * MINUTE);
        visits.push(Visit {
            building: home,
            arrive: home_since,
            depart: leave,
            open: false,
        });

        let mut t = d0 + 9 * HOUR + rng.gen_range(0..10 * MINUTE);
        t = academic_blocks(rng, places, t, d0 + 12 * HOUR, &mut visits);
        if rng.gen_bool(CANTEEN_PROBABILITY) {
            let arrive = t.max(d0 + 12 * HOUR + rng.gen_range(0..10 * MINUTE));
            let depart = d0 + 13 * HOUR - rng.gen_range(0..10 * MINUTE);
            visits.push(Visit {
                building: places.canteen.choose(rng).expect("non-empty"),
                arrive,
                depart,
                open: false,
            });
            t = depart + transit(rng);
        } else {
            t = academic_blocks(rng, places, t, d0 + 13 * HOUR, &mut visits);
        }
        t = academic_blocks(rng, places, t, d0 + 17 * HOUR, &mut visits);

        home_since = if rng.gen_bool(LIBRARY_PROBABILITY) {
            let arrive = d0 + 18 * HOUR + rng.gen_range(0..HOUR);
            let depart = d0 + 21 * HOUR + rng.gen_range(0..HOUR);
            visits.push(Visit {
                building: library,
                arrive,
                depart,
                open: false,
            });
            depart + transit(rng)
        } else {
            t.max(d0 + 17 * HOUR) + rng.gen_range(30 * MINUTE..=2 * HOUR)
        };
    }
    visits.push(Visit {
        building: home,
        arrive: home_since,
        depart: sim_end,
        open: true,
    });
    visits
}

fn emit(rng: &mut ChaCha8Rng, registry: &Registry, device: &str, visit: &Visit<'_>, out: &mut Vec<AssociationEvent>) {
    let aps: Vec<&str> = registry.aps_in(visit.building).map(|ap| ap.id.as_str()).collect();
    let ap = *aps.choose(rng).expect("building has an access point");
    let device: std::sync::Arc<str> = device.into();
    let ap: std::sync::Arc<str> = ap.into();
    let mut push = |ts, kind| {
        out.push(AssociationEvent {
            ts,
            device_id: device.clone(),
            ap_id: ap.clone(),
            kind,
        })
    };
    push(visit.arrive, EventKind::Connect);
    let mut t = visit.arrive + POLL_INTERVAL + rng.gen_range(-POLL_JITTER..=POLL_JITTER);
    while t < visit.depart {
        push(t, EventKind::Poll);
        t += POLL_INTERVAL + rng.gen_range(-POLL_JITTER..=POLL_JITTER);
    }
    if !visit.open {
        push(visit.depart, EventKind::Disconnect);
    }
}

/// Device token for simulated device `index`: a 16-hex-digit hash.
pub fn device_token(seed: u64, index: u32) -> String {
    format!("{:016x}", splitmix64(seed ^ splitmix64(u64::from(index))))
}

pub fn generate(config: &SimConfig, registry: &Registry) -> Result<EventStream, SimError> {
    if config.days == 0 {
        return Err(SimError::Config("days must be at least 1".into()));
    }
    let places = Places::from_registry(registry)?;
    let mut events = Vec::new();
    for index in 0..config.devices {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(u64::from(index));
        let device = device_token(config.seed, index);
        for visit in plan_device(&mut rng, &places, config) {
            emit(&mut rng, registry, &device, &visit, &mut events);
        }
    }
    Ok(EventStream::from_events(events))
}

/// Writes `stream` to `path` in the association log format.
pub fn write_log(stream: &EventStream, path: impl AsRef<Path>) -> io::Result<()> {
    let file = File::create(path)?;
    write_log_to(stream.events(), BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::read_log;
    use crate::registry::RegistryFile;
    use crate::testutil::tiny_registry;
    use std::collections::HashMap;

    #[test]
    fn zero_devices_is_empty() {
        let s = generate(&SimConfig::new(0, 1, 7), &tiny_registry()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn deterministic() {
        let reg = tiny_registry();
        let a = generate(&SimConfig::new(20, 2, 42), &reg).unwrap();
        let b = generate(&SimConfig::new(20, 2, 42), &reg).unwrap();
        assert_eq!(a, b);
        let c = generate(&SimConfig::new(20, 2, 43), &reg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_days_rejected() {
        assert!(generate(&SimConfig::new(1, 0, 1), &tiny_registry()).is_err());
    }

    #[test]
    fn requires_schedule_categories() {
        let mut file: RegistryFile = tiny_registry().to_file();
        file.buildings.retain(|b| b.category != Category::Canteen);
        file.aps.retain(|ap| ap.building_id != "CANT");
        file.buildings[0].important = true;
        let reg = Registry::from_file(file).unwrap();
        let err = generate(&SimConfig::new(5, 1, 1), &reg).unwrap_err();
        assert!(err.to_string().contains("canteen"), "{err}");
    }

    #[test]
    fn well_formed_output() {
        let reg = tiny_registry();
        let s = generate(&SimConfig::new(40, 3, 9), &reg).unwrap();
        let end = DEFAULT_START_TS + 3 * DAY;
        let mut last: HashMap<&str, i64> = HashMap::new();
        for e in s.events() {
            assert!(reg.access_point(&e.ap_id).is_some());
            assert!(e.ts >= DEFAULT_START_TS && e.ts <= end);
            if let Some(prev) = last.insert(&e.device_id, e.ts) {
                assert!(e.ts > prev, "device {} not strictly increasing", e.device_id);
            }
        }
    }

    #[test]
    fn poll_gaps_stay_within_jitter() {
        let reg = tiny_registry();
        let s = generate(&SimConfig::new(10, 1, 3), &reg).unwrap();
        let mut by_dev: HashMap<&str, Vec<&AssociationEvent>> = HashMap::new();
        for e in s.events() {
            by_dev.entry(&e.device_id).or_default().push(e);
        }
        for evs in by_dev.values() {
            for w in evs.windows(2) {
                if w[1].kind == EventKind::Poll {
                    let gap = w[1].ts - w[0].ts;
                    assert!((240..=360).contains(&gap), "gap {gap}");
                }
            }
        }
    }

    #[test]
    fn write_then_read_round_trips() {
        let reg = tiny_registry();
        let s = generate(&SimConfig::new(5, 1, 11), &reg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        write_log(&s, &path).unwrap();
        let back = read_log(io::BufReader::new(File::open(&path).unwrap()), &reg).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empty_stream_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_log(&EventStream::default(), &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 0);
    }

    #[test]
    fn unsorted_events_are_written_sorted() {
        let events = vec![
            AssociationEvent::new(30, "d", "AP-LIB-01", EventKind::Poll),
            AssociationEvent::new(10, "d", "AP-LIB-01", EventKind::Connect),
            AssociationEvent::new(20, "d", "AP-LIB-01", EventKind::Poll),
        ];
        let mut buf = Vec::new();
        write_log_to(&events, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let ts: Vec<i64> = text
            .lines()
            .map(|l| crate::ingest::parse_event_line(l).unwrap().ts)
            .collect();
        assert_eq!(ts, [10, 20, 30]);
    }

    #[test]
    fn device_tokens_are_distinct() {
        let tokens: std::collections::HashSet<String> = (0..1000).map(|i| device_token(5, i)).collect();
        assert_eq!(tokens.len(), 1000);
    }
}
