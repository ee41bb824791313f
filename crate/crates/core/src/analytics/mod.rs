//! Everything derived from the event stream: sessions, occupancy, peaks,
//! rankings, movement, crowdedness, forecasts, and the snapshot that bundles
//! them for display.
//!
//! Intervals are half-open (`[start, end)`) throughout, counts are distinct
//! devices, and every tie is broken by ascending id.

mod forecast;
mod index;
mod level;
mod movement;
mod occupancy;
mod peaks;
mod ranking;
mod session;
mod snapshot;

use thiserror::Error;

use crate::Timestamp;

pub use forecast::{forecast, forecast_series, forecast_with, DEFAULT_FORECAST_WEEKS};
pub use index::SnapshotIndex;
pub use level::{crowd_level, CrowdLevel, BASELINE_FLOOR};
pub use movement::{
    count_transitions, movement_matrix, top_flux, transitions, EdgeCounts, FluxEntry, MovementMatrix, Transition,
    DEFAULT_GAP_MAX, DEFAULT_LADDER_LEN,
};
pub use occupancy::{bin_series, campus_series, occupancy_at, OccupancySeries, DEFAULT_BIN_WIDTH};
pub use peaks::{detect_peaks, Peak, DEFAULT_MIN_SEPARATION_BINS, DEFAULT_PEAK_COUNT};
pub use ranking::{zone_ranking, ZoneTotal};
pub use session::{sessionize, DeviceSession, Sessions, DEFAULT_IDLE_TIMEOUT};
pub use snapshot::{build_snapshot, compose_snapshot, DirectSource, Snapshot, SnapshotParams, SnapshotSource};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("invalid span [{start}, {end}) for bin width {bin_width}")]
    InvalidSpan {
        start: Timestamp,
        end: Timestamp,
        bin_width: i64,
    },
    #[error("unknown building {0:?}")]
    UnknownBuilding(String),
    #[error("invalid snapshot parameters: {0}")]
    InvalidParams(String),
}
