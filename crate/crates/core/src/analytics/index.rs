//! Precomputed snapshot source for serving many instants from one log.
//!
//! Sessions are stitched once over the whole stream, binned onto a global
//! grid, and indexed so that each snapshot costs roughly the size of its
//! output rather than the size of the log. Because every snapshot query
//! covers a window ending at or before its instant, sessions built from the
//! full stream answer it exactly as a rebuild from the known prefix would.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::movement::{count_transitions, transitions, MovementMatrix, Transition};
use super::occupancy::{accumulate_bins, bin_series, OccupancySeries};
use super::session::{sessionize, Sessions};
use super::snapshot::{compose_snapshot, Snapshot, SnapshotParams, SnapshotSource};
use super::AnalyticsError;
use crate::ingest::EventStream;
use crate::registry::Registry;
use crate::Timestamp;

/// Sparse table answering range-maximum queries in O(1).
#[derive(Debug, Clone)]
struct RangeMax {
    levels: Vec<Vec<u32>>,
}

impl RangeMax {
    fn new(values: &[u32]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut span = 1;
        while span * 2 <= values.len() {
            let prev = levels.last().expect("level 0 exists");
            let next: Vec<u32> = (0..=values.len() - span * 2)
                .map(|i| prev[i].max(prev[i + span]))
                .collect();
            levels.push(next);
            span *= 2;
        }
        Self { levels }
    }

    /// Max over `[lo, hi)`, zero when empty.
    fn query(&self, lo: usize, hi: usize) -> u32 {
        if lo >= hi {
            return 0;
        }
        let k = (usize::BITS - 1 - (hi - lo).leading_zeros()) as usize;
        let level = &self.levels[k];
        level[lo].max(level[hi - (1 << k)])
    }
}

#[derive(Debug, Clone)]
struct BuildingIndex {
    bins: Vec<u32>,
    max: RangeMax,
    /// (start, end, device) sorted by start.
    by_start: Vec<(Timestamp, Timestamp, Arc<str>)>,
    /// Running maximum of `end` over `by_start`.
    prefix_max_end: Vec<Timestamp>,
}

#[derive(Debug, Clone)]
pub struct SnapshotIndex {
    registry: Registry,
    params: SnapshotParams,
    first_ts: Option<Timestamp>,
    last_ts: Option<Timestamp>,
    grid_start: Timestamp,
    grid_len: usize,
    buildings: BTreeMap<String, BuildingIndex>,
    campus: Vec<u32>,
    moves: Vec<Transition>,
    sessions: Sessions,
}

impl SnapshotIndex {
    pub fn build(events: &EventStream, registry: &Registry, params: &SnapshotParams) -> Result<Self, AnalyticsError> {
        params.validate()?;
        let w = params.bin_width;
        let sessions = sessionize(events.events(), registry, params.idle_timeout);
        let first_ts = events.first_ts();
        let grid_start = first_ts.map_or(0, |t| params.align(t));
        let latest_end = sessions
            .values()
            .flat_map(|l| l.iter().map(|s| s.end))
            .max()
            .unwrap_or(grid_start);
        let grid_len = ((latest_end.max(grid_start) - grid_start + w - 1) / w) as usize;

        let mut buildings = BTreeMap::new();
        for b in registry.buildings() {
            let id = b.id.as_str();
            let mut bins = vec![0u32; grid_len];
            accumulate_bins(
                sessions
                    .values()
                    .map(|l| l.iter().filter(move |s| &*s.building_id == id)),
                grid_start,
                w,
                &mut bins,
            );
            let mut by_start: Vec<_> = sessions
                .values()
                .flat_map(|l| l.iter())
                .filter(|s| &*s.building_id == id)
                .map(|s| (s.start, s.end, Arc::clone(&s.device_id)))
                .collect();
            by_start.sort();
            let prefix_max_end = by_start
                .iter()
                .scan(Timestamp::MIN, |m, s| {
                    *m = (*m).max(s.1);
                    Some(*m)
                })
                .collect();
            buildings.insert(
                b.id.clone(),
                BuildingIndex {
                    max: RangeMax::new(&bins),
                    bins,
                    by_start,
                    prefix_max_end,
                },
            );
        }

        let mut campus = vec![0u32; grid_len];
        accumulate_bins(sessions.values().map(|l| l.iter()), grid_start, w, &mut campus);

        Ok(Self {
            registry: registry.clone(),
            params: params.clone(),
            first_ts,
            last_ts: events.last_ts(),
            grid_start,
            grid_len,
            buildings,
            campus,
            moves: transitions(&sessions, params.gap_max),
            sessions,
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn params(&self) -> &SnapshotParams {
        &self.params
    }

    pub fn first_event_ts(&self) -> Option<Timestamp> {
        self.first_ts
    }

    pub fn last_event_ts(&self) -> Option<Timestamp> {
        self.last_ts
    }

    pub fn sessions(&self) -> &Sessions {
        &self.sessions
    }

    pub fn snapshot(&self, at: Timestamp) -> Result<Snapshot, AnalyticsError> {
        compose_snapshot(self, &self.registry, at, &self.params)
    }

    /// A building's series over the `hours` before `now`, ending on the grid.
    pub fn history(&self, building_id: &str, now: Timestamp, hours: u32) -> Result<OccupancySeries, AnalyticsError> {
        if self.registry.building(building_id).is_none() {
            return Err(AnalyticsError::UnknownBuilding(building_id.to_string()));
        }
        let end = self.params.align(now);
        let start = end - i64::from(hours) * crate::HOUR;
        if hours == 0 || (end - start) % self.params.bin_width != 0 {
            return Err(AnalyticsError::InvalidSpan {
                start,
                end,
                bin_width: self.params.bin_width,
            });
        }
        Ok(self.building_series(building_id, start, end))
    }

    /// Grid slot of `t` if it lies on the grid.
    fn slot(&self, t: Timestamp) -> Option<i64> {
        let off = t - self.grid_start;
        (off % self.params.bin_width == 0).then(|| off / self.params.bin_width)
    }

    fn slice(
        &self,
        bins: &[u32],
        start: Timestamp,
        end: Timestamp,
        building_id: Option<&str>,
    ) -> Option<OccupancySeries> {
        let lo = self.slot(start)?;
        let hi = self.slot(end)?;
        let counts = (lo..hi)
            .map(|i| usize::try_from(i).ok().and_then(|i| bins.get(i).copied()).unwrap_or(0))
            .collect();
        Some(OccupancySeries {
            building_id: building_id.map(str::to_string),
            bin_start: start,
            bin_width: self.params.bin_width,
            counts,
        })
    }

    fn clip(&self, slot: i64) -> usize {
        slot.clamp(0, self.grid_len as i64) as usize
    }
}

impl SnapshotSource for SnapshotIndex {
    fn first_ts(&self, at: Timestamp) -> Option<Timestamp> {
        self.first_ts.filter(|&t| t <= at)
    }

    fn occupancy_at(&self, t: Timestamp) -> BTreeMap<String, u32> {
        self.buildings
            .iter()
            .map(|(id, idx)| {
                let upto = idx.by_start.partition_point(|s| s.0 <= t);
                let mut present: HashSet<&str> = HashSet::new();
                for i in (0..upto).rev() {
                    if idx.prefix_max_end[i] <= t {
                        break;
                    }
                    let (_, end, dev) = &idx.by_start[i];
                    if *end > t {
                        present.insert(dev);
                    }
                }
                (id.clone(), present.len() as u32)
            })
            .collect()
    }

    fn building_series(&self, building_id: &str, start: Timestamp, end: Timestamp) -> OccupancySeries {
        self.buildings
            .get(building_id)
            .and_then(|idx| self.slice(&idx.bins, start, end, Some(building_id)))
            .unwrap_or_else(|| {
                bin_series(&self.sessions, building_id, start, end, self.params.bin_width)
                    .expect("snapshot windows are grid aligned")
            })
    }

    fn campus_series(&self, start: Timestamp, end: Timestamp) -> OccupancySeries {
        self.slice(&self.campus, start, end, None).unwrap_or_else(|| {
            super::occupancy::campus_series(&self.sessions, start, end, self.params.bin_width)
                .expect("snapshot windows are grid aligned")
        })
    }

    fn building_max(&self, building_id: &str, start: Timestamp, end: Timestamp) -> u32 {
        match (self.buildings.get(building_id), self.slot(start), self.slot(end)) {
            (Some(idx), Some(lo), Some(hi)) => idx.max.query(self.clip(lo), self.clip(hi)),
            _ => self.building_series(building_id, start, end).max(),
        }
    }

    fn movement(&self, window_start: Timestamp, window_end: Timestamp) -> MovementMatrix {
        let lo = self.moves.partition_point(|m| m.arrival < window_start);
        let hi = self.moves.partition_point(|m| m.arrival < window_end);
        let counts = count_transitions(&self.moves[lo..hi.max(lo)]);
        MovementMatrix::from_building_counts(window_start, window_end, counts, &self.registry)
    }
}
