use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::forecast::{forecast_series, DEFAULT_FORECAST_WEEKS};
use super::level::{crowd_level, CrowdLevel};
use super::movement::{movement_matrix, top_flux, FluxEntry, MovementMatrix, DEFAULT_GAP_MAX, DEFAULT_LADDER_LEN};
use super::occupancy::{bin_series, campus_series, occupancy_at, OccupancySeries, DEFAULT_BIN_WIDTH};
use super::peaks::{detect_peaks, Peak, DEFAULT_MIN_SEPARATION_BINS, DEFAULT_PEAK_COUNT};
use super::ranking::{zone_ranking, ZoneTotal};
use super::session::{sessionize, Sessions, DEFAULT_IDLE_TIMEOUT};
use super::AnalyticsError;
use crate::ingest::EventStream;
use crate::registry::Registry;
use crate::{Timestamp, DAY, HOUR};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnapshotParams {
    pub idle_timeout: i64,
    pub gap_max: i64,
    pub bin_width: i64,
    pub peak_count: usize,
    pub peak_min_separation_bins: usize,
    pub ladder_len: usize,
    pub movement_window: i64,
    pub history_window: i64,
    pub forecast_horizon: i64,
    pub forecast_weeks: u32,
    /// Look-back for each building's crowdedness baseline.
    pub baseline_window: i64,
}

impl Default for SnapshotParams {
    fn default() -> Self {
        Self {
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            gap_max: DEFAULT_GAP_MAX,
            bin_width: DEFAULT_BIN_WIDTH,
            peak_count: DEFAULT_PEAK_COUNT,
            peak_min_separation_bins: DEFAULT_MIN_SEPARATION_BINS,
            ladder_len: DEFAULT_LADDER_LEN,
            movement_window: HOUR,
            history_window: DAY,
            forecast_horizon: DAY,
            forecast_weeks: DEFAULT_FORECAST_WEEKS,
            baseline_window: 14 * DAY,
        }
    }
}

impl SnapshotParams {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let w = self.bin_width;
        let aligned = |span: i64| span > 0 && span % w == 0;
        if w <= 0
            || !aligned(self.history_window)
            || !aligned(self.forecast_horizon)
            || !aligned(self.baseline_window)
            || self.movement_window <= 0
            || self.idle_timeout < 0
            || self.gap_max < 0
        {
            return Err(AnalyticsError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    /// `t` rounded down to the bin grid.
    pub fn align(&self, t: Timestamp) -> Timestamp {
        t.div_euclid(self.bin_width) * self.bin_width
    }
}

/// Every statistic shown on the display at one instant.
///
/// Binned series end at `at` rounded down to the bin grid, so the last bin
/// is always complete.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub at: Timestamp,
    pub per_building_count: BTreeMap<String, u32>,
    pub zone_ranking: Vec<ZoneTotal>,
    pub per_building_level: BTreeMap<String, CrowdLevel>,
    /// Last 24 hours, important buildings only.
    pub history_24h: BTreeMap<String, OccupancySeries>,
    pub peaks: BTreeMap<String, Vec<Peak>>,
    /// Campus-wide distinct devices over the last 24 hours.
    pub total_series: OccupancySeries,
    /// Campus-wide prediction for the next 24 hours.
    pub forecast_series: OccupancySeries,
    /// Moves arriving in the trailing hour.
    pub movement: MovementMatrix,
    pub ladder_in: Vec<FluxEntry>,
    pub ladder_out: Vec<FluxEntry>,
}

/// Read access to session-derived data, as known at some instant.
///
/// Callers only request windows ending at or before the snapshot instant.
/// Implementations may hold sessions built from later events too: for such
/// windows the result is identical.
pub trait SnapshotSource {
    /// Earliest event timestamp at or before `at`.
    fn first_ts(&self, at: Timestamp) -> Option<Timestamp>;
    fn occupancy_at(&self, t: Timestamp) -> BTreeMap<String, u32>;
    /// Series over `[start, end)` on the bin grid; `start < end`.
    fn building_series(&self, building_id: &str, start: Timestamp, end: Timestamp) -> OccupancySeries;
    fn campus_series(&self, start: Timestamp, end: Timestamp) -> OccupancySeries;
    fn movement(&self, window_start: Timestamp, window_end: Timestamp) -> MovementMatrix;

    fn building_max(&self, building_id: &str, start: Timestamp, end: Timestamp) -> u32 {
        self.building_series(building_id, start, end).max()
    }
}

/// Assembles a [`Snapshot`] from any source.
pub fn compose_snapshot<S: SnapshotSource + ?Sized>(
    source: &S,
    registry: &Registry,
    at: Timestamp,
    params: &SnapshotParams,
) -> Result<Snapshot, AnalyticsError> {
    params.validate()?;
    let w = params.bin_width;
    let end = params.align(at);
    let data_start = source.first_ts(at).map(|t| params.align(t));

    let per_building_count = source.occupancy_at(at);
    let zone_ranking = zone_ranking(&per_building_count, registry)?;

    let baseline_start = data_start.map(|d| d.max(end - params.baseline_window));
    let per_building_level = per_building_count
        .iter()
        .map(|(b, &count)| {
            let baseline = match baseline_start {
                Some(s) if s < end => source.building_max(b, s, end),
                _ => 0,
            };
            (b.clone(), crowd_level(u64::from(count), u64::from(baseline)))
        })
        .collect();

    let history_start = end - params.history_window;
    let mut history_24h = BTreeMap::new();
    let mut peaks = BTreeMap::new();
    for b in registry.important_buildings() {
        let series = source.building_series(&b.id, history_start, end);
        peaks.insert(
            b.id.clone(),
            detect_peaks(&series, params.peak_count, params.peak_min_separation_bins),
        );
        history_24h.insert(b.id.clone(), series);
    }
    let total_series = source.campus_series(history_start, end);

    let forecast_start = data_start
        .map(|d| d.max(end - i64::from(params.forecast_weeks) * crate::WEEK))
        .filter(|&s| s < end);
    let forecast_history = match forecast_start {
        Some(s) => source.campus_series(s, end),
        None => OccupancySeries::zeros(None, end, w, 0),
    };
    let horizon = (params.forecast_horizon / w) as usize;
    let forecast_series = forecast_series(&forecast_history, horizon, params.forecast_weeks);

    let movement = source.movement(at - params.movement_window, at);
    let (ladder_in, ladder_out) = top_flux(&movement, params.ladder_len);

    Ok(Snapshot {
        at,
        per_building_count,
        zone_ranking,
        per_building_level,
        history_24h,
        peaks,
        total_series,
        forecast_series,
        movement,
        ladder_in,
        ladder_out,
    })
}

/// Straightforward source: sessions rebuilt from the known events and every
/// query answered by scanning them.
pub struct DirectSource<'a> {
    sessions: Sessions,
    first_ts: Option<Timestamp>,
    registry: &'a Registry,
    params: SnapshotParams,
}

impl<'a> DirectSource<'a> {
    pub fn new(events: &EventStream, registry: &'a Registry, at: Timestamp, params: &SnapshotParams) -> Self {
        let known = events.known_at(at);
        Self {
            sessions: sessionize(known, registry, params.idle_timeout),
            first_ts: known.first().map(|e| e.ts),
            registry,
            params: params.clone(),
        }
    }

    pub fn sessions(&self) -> &Sessions {
        &self.sessions
    }
}

impl SnapshotSource for DirectSource<'_> {
    fn first_ts(&self, at: Timestamp) -> Option<Timestamp> {
        self.first_ts.filter(|&t| t <= at)
    }

    fn occupancy_at(&self, t: Timestamp) -> BTreeMap<String, u32> {
        occupancy_at(&self.sessions, self.registry, t)
    }

    fn building_series(&self, building_id: &str, start: Timestamp, end: Timestamp) -> OccupancySeries {
        bin_series(&self.sessions, building_id, start, end, self.params.bin_width)
            .expect("snapshot windows are grid aligned")
    }

    fn campus_series(&self, start: Timestamp, end: Timestamp) -> OccupancySeries {
        campus_series(&self.sessions, start, end, self.params.bin_width).expect("snapshot windows are grid aligned")
    }

    fn movement(&self, window_start: Timestamp, window_end: Timestamp) -> MovementMatrix {
        movement_matrix(
            &self.sessions,
            self.registry,
            window_start,
            window_end,
            self.params.gap_max,
        )
    }
}

/// Snapshot at `at` from the events known by then (`ts <= at`).
pub fn build_snapshot(
    events: &EventStream,
    registry: &Registry,
    at: Timestamp,
    params: &SnapshotParams,
) -> Result<Snapshot, AnalyticsError> {
    params.validate()?;
    let source = DirectSource::new(events, registry, at, params);
    compose_snapshot(&source, registry, at, params)
}
