use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::session::Sessions;
use crate::registry::Registry;
use crate::Timestamp;

pub const DEFAULT_GAP_MAX: i64 = 1800;
pub const DEFAULT_LADDER_LEN: usize = 5;

pub type EdgeCounts = BTreeMap<(String, String), u64>;

/// Directed transition counts within `[window_start, window_end)`.
/// Serialized as edge lists since JSON object keys cannot be pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementMatrix {
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    #[serde(with = "edge_list")]
    pub building_counts: EdgeCounts,
    #[serde(with = "edge_list")]
    pub zone_counts: EdgeCounts,
}

mod edge_list {
    use super::EdgeCounts;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Edge {
        from: String,
        to: String,
        count: u64,
    }

    pub fn serialize<S: Serializer>(counts: &EdgeCounts, ser: S) -> Result<S::Ok, S::Error> {
        let edges: Vec<Edge> = counts
            .iter()
            .map(|((from, to), &count)| Edge {
                from: from.clone(),
                to: to.clone(),
                count,
            })
            .collect();
        edges.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<EdgeCounts, D::Error> {
        let edges = Vec::<Edge>::deserialize(de)?;
        Ok(edges.into_iter().map(|e| ((e.from, e.to), e.count)).collect())
    }
}

impl MovementMatrix {
    pub fn empty(window_start: Timestamp, window_end: Timestamp) -> Self {
        Self {
            window_start,
            window_end,
            building_counts: EdgeCounts::new(),
            zone_counts: EdgeCounts::new(),
        }
    }

    /// Builds the matrix from building-level counts, deriving the zone
    /// roll-up. Moves between two buildings of the same zone are kept at
    /// building level and dropped from the zone level.
    pub fn from_building_counts(
        window_start: Timestamp,
        window_end: Timestamp,
        building_counts: EdgeCounts,
        registry: &Registry,
    ) -> Self {
        let mut zone_counts = EdgeCounts::new();
        for ((from, to), &n) in &building_counts {
            let (Ok(zf), Ok(zt)) = (registry.zone_of(from), registry.zone_of(to)) else {
                continue;
            };
            if zf.id != zt.id {
                *zone_counts.entry((zf.id.clone(), zt.id.clone())).or_default() += n;
            }
        }
        Self {
            window_start,
            window_end,
            building_counts,
            zone_counts,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.building_counts.is_empty()
    }

    pub fn total_building_moves(&self) -> u64 {
        self.building_counts.values().sum()
    }

    pub fn total_zone_moves(&self) -> u64 {
        self.zone_counts.values().sum()
    }
}

/// One device moving from one building to another, timed at arrival.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub arrival: Timestamp,
    pub from: Arc<str>,
    pub to: Arc<str>,
}

/// Every qualifying consecutive session pair, sorted by arrival time.
pub fn transitions(sessions: &Sessions, gap_max: i64) -> Vec<Transition> {
    let mut out = Vec::new();
    for list in sessions.values() {
        for pair in list.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let gap = b.start - a.end;
            if a.building_id != b.building_id && (0..=gap_max).contains(&gap) {
                out.push(Transition {
                    arrival: b.start,
                    from: Arc::clone(&a.building_id),
                    to: Arc::clone(&b.building_id),
                });
            }
        }
    }
    out.sort_by(|x, y| (x.arrival, &x.from, &x.to).cmp(&(y.arrival, &y.from, &y.to)));
    out
}

/// Folds transitions into building-level counts.
pub fn count_transitions<'a>(moves: impl IntoIterator<Item = &'a Transition>) -> EdgeCounts {
    let mut tally: HashMap<(&str, &str), u64> = HashMap::new();
    for t in moves {
        *tally.entry((&t.from, &t.to)).or_default() += 1;
    }
    tally
        .into_iter()
        .map(|((f, t), n)| ((f.to_string(), t.to_string()), n))
        .collect()
}

/// Counts moves between buildings that arrive inside the window.
///
/// For each device, a consecutive pair of sessions at different buildings
/// counts once when the gap between them is within `[0, gap_max]` and the
/// second session starts in `[window_start, window_end)`.
pub fn movement_matrix(
    sessions: &Sessions,
    registry: &Registry,
    window_start: Timestamp,
    window_end: Timestamp,
    gap_max: i64,
) -> MovementMatrix {
    let mut counts = EdgeCounts::new();
    for list in sessions.values() {
        for pair in list.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let gap = b.start - a.end;
            if a.building_id == b.building_id || gap < 0 || gap > gap_max {
                continue;
            }
            if b.start < window_start || b.start >= window_end {
                continue;
            }
            *counts
                .entry((a.building_id.to_string(), b.building_id.to_string()))
                .or_default() += 1;
        }
    }
    MovementMatrix::from_building_counts(window_start, window_end, counts, registry)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluxEntry {
    pub building_id: String,
    pub count: u64,
}

fn ladder(totals: BTreeMap<&str, u64>, n: usize) -> Vec<FluxEntry> {
    let mut entries: Vec<FluxEntry> = totals
        .into_iter()
        .filter(|&(_, c)| c > 0)
        .map(|(b, count)| FluxEntry {
            building_id: b.to_string(),
            count,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.building_id.cmp(&b.building_id)));
    entries.truncate(n);
    entries
}

/// Buildings with the most incoming and outgoing moves, `(ladder_in,
/// ladder_out)`. Each is sorted by count descending, then id ascending.
pub fn top_flux(matrix: &MovementMatrix, n: usize) -> (Vec<FluxEntry>, Vec<FluxEntry>) {
    let mut incoming: BTreeMap<&str, u64> = BTreeMap::new();
    let mut outgoing: BTreeMap<&str, u64> = BTreeMap::new();
    for ((from, to), &c) in &matrix.building_counts {
        *outgoing.entry(from).or_default() += c;
        *incoming.entry(to).or_default() += c;
    }
    (ladder(incoming, n), ladder(outgoing, n))
}
