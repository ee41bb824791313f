//! Crowd analytics for a campus Wi-Fi network.
//!
//! The pipeline runs left to right:
//!
//! - [`registry`]: campus zones, buildings and access points;
//! - [`ingest`]: association log parsing into an ordered [`EventStream`];
//! - [`analytics`]: sessions, occupancy, movement and the [`Snapshot`];
//! - [`encoding`]: the render-ready [`DisplayPayload`] for the kiosk.
//!
//! [`simgen`] produces synthetic logs in the same format for testing and
//! demos.

pub mod analytics;
pub mod encoding;
pub mod ingest;
pub mod registry;
pub mod simgen;

#[cfg(test)]
pub(crate) mod testutil;

/// Unix seconds.
pub type Timestamp = i64;

pub const HOUR: i64 = 3600;
pub const DAY: i64 = 86_400;
pub const WEEK: i64 = 7 * DAY;

pub use analytics::{
    build_snapshot, AnalyticsError, CrowdLevel, MovementMatrix, OccupancySeries, Snapshot, SnapshotIndex,
    SnapshotParams,
};
pub use encoding::{build_display_payload, DisplayPayload, PayloadParams};
pub use ingest::{read_log, AssociationEvent, EventKind, EventStream};
pub use registry::{load_registry, Building, Category, Registry, RegistryError, Zone};
pub use simgen::{generate, write_log, SimConfig};
