//! Visual encodings: turns a [`Snapshot`] into the exact parameters the
//! kiosk draws, so the display never computes a statistic itself.
//!
//! - Map points: column height linear in the device count, a ±20 % bounce
//!   animated client-side, and a blue → cyan → green → yellow → red ramp
//!   saturating at 1000 devices.
//! - Pop-up rotation: one panel per important building, with the 24 h line
//!   chart's peak marks duplicated as a text table.
//! - Chart view: zone ranking bars on the same ramp, history + forecast
//!   line, zone chord matrix with the top movements anchored and spelled
//!   out, and the in/out flux ladders.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{crowd_level, CrowdLevel, MovementMatrix, OccupancySeries, Peak, Snapshot};
use crate::registry::{Category, Registry};
use crate::{Timestamp, DAY};

pub const BOUNCE_AMPLITUDE_RATIO: f64 = 0.2;
pub const DEFAULT_BOUNCE_PERIOD: f64 = 2.0;
pub const DEFAULT_HEIGHT_SCALE: f64 = 0.5;
pub const DEFAULT_DWELL_SECONDS: u32 = 10;
pub const DEFAULT_ANCHOR_COUNT: usize = 10;

/// Count at which the color ramp saturates.
pub const COLOR_SATURATION_COUNT: u64 = 1000;

/// 8-bit RGB, serialized as `[r, g, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

/// Ramp stops as (count, color). Cool hues near the basemap for quiet
/// places, warm salient hues for busy ones.
pub const COLOR_STOPS: [(u64, Rgb); 5] = [
    (0, Rgb(0, 92, 230)),
    (200, Rgb(0, 255, 255)),
    (500, Rgb(0, 200, 80)),
    (750, Rgb(255, 220, 0)),
    (1000, Rgb(230, 30, 30)),
];

/// Piecewise-linear color for a device count, clamped at 1000.
pub fn color_for_count(count: u64) -> Rgb {
    let c = count.min(COLOR_SATURATION_COUNT);
    let seg = COLOR_STOPS
        .windows(2)
        .find(|w| c <= w[1].0)
        .expect("stops cover [0, 1000]");
    let ((k0, c0), (k1, c1)) = (seg[0], seg[1]);
    let t = (c - k0) as f64 / (k1 - k0) as f64;
    let lerp = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
    Rgb(lerp(c0.0, c1.0), lerp(c0.1, c1.1), lerp(c0.2, c1.2))
}

pub fn point_height(count: u64, scale: f64) -> f64 {
    scale * count as f64
}

/// Animated column height: oscillates between 80 % and 120 % of `base`.
pub fn bounce_height(base: f64, t: f64, period: f64, phase: f64) -> f64 {
    base * (1.0 + BOUNCE_AMPLITUDE_RATIO * (TAU * t / period + phase).sin())
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Per-building phase offset in radians: a whole number of degrees derived
/// from a stable hash of the id, so columns move out of step but identically
/// across restarts.
pub fn bounce_phase(building_id: &str) -> f64 {
    let degrees = fnv1a64(building_id.as_bytes()) % 360;
    degrees as f64 * PI / 180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPointEncoding {
    pub building_id: String,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub base_height: f64,
    pub bounce_amplitude_ratio: f64,
    pub bounce_period: f64,
    pub bounce_phase: f64,
    pub color: Rgb,
    pub level: CrowdLevel,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordAnchor {
    pub from_zone: String,
    pub to_zone: String,
    pub count: u64,
    pub highlighted: bool,
    /// Empty unless highlighted.
    pub redundancy_text: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("snapshot references unknown building {0:?}")]
    UnknownBuilding(String),
    #[error("snapshot references unknown zone {0:?}")]
    UnknownZone(String),
}

fn zone_name<'r>(registry: &'r Registry, id: &str) -> Result<&'r str, EncodingError> {
    registry
        .zone(id)
        .map(|z| z.name.as_str())
        .ok_or_else(|| EncodingError::UnknownZone(id.to_string()))
}

/// Every nonzero zone edge, largest first (ties by ascending from, to).
/// The first `k` are highlighted and carry a sentence restating the edge.
pub fn anchor_chords(
    matrix: &MovementMatrix,
    registry: &Registry,
    k: usize,
) -> Result<Vec<ChordAnchor>, EncodingError> {
    let mut edges: Vec<(&(String, String), u64)> = matrix
        .zone_counts
        .iter()
        .filter(|&(_, &n)| n > 0)
        .map(|(e, &n)| (e, n))
        .collect();
    // BTreeMap iteration is already (from, to) ascending; stable sort keeps it.
    edges.sort_by_key(|e| std::cmp::Reverse(e.1));
    edges
        .into_iter()
        .enumerate()
        .map(|(rank, ((from, to), count))| {
            let highlighted = rank < k;
            let redundancy_text = if highlighted {
                format!(
                    "{} → {}: {} moved in the last hour",
                    zone_name(registry, from)?,
                    zone_name(registry, to)?,
                    count
                )
            } else {
                String::new()
            };
            Ok(ChordAnchor {
                from_zone: from.clone(),
                to_zone: to.clone(),
                count,
                highlighted,
                redundancy_text,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakRow {
    /// `HH:MM`, UTC.
    pub time_label: String,
    pub ts: Timestamp,
    pub count: u32,
}

pub fn time_label(ts: Timestamp) -> String {
    let sec = ts.rem_euclid(DAY);
    format!("{:02}:{:02}", sec / 3600, (sec % 3600) / 60)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopupPanel {
    pub building_id: String,
    pub name: String,
    pub category: Category,
    pub count: u32,
    pub level: CrowdLevel,
    pub series_24h: OccupancySeries,
    pub peak_marks: Vec<Peak>,
    /// The same peaks as `peak_marks`, as text.
    pub peak_table: Vec<PeakRow>,
    pub pin: GeoPoint,
}

impl PopupPanel {
    /// Chart marks and table rows carry identical (ts, count) multisets.
    pub fn is_redundant(&self) -> bool {
        let mut marks: Vec<(Timestamp, u32)> = self.peak_marks.iter().map(|p| (p.ts, p.count)).collect();
        let mut rows: Vec<(Timestamp, u32)> = self.peak_table.iter().map(|r| (r.ts, r.count)).collect();
        marks.sort_unstable();
        rows.sort_unstable();
        marks == rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopupRotation {
    pub dwell_seconds: u32,
    pub panels: Vec<PopupPanel>,
}

fn level_of(snapshot: &Snapshot, building_id: &str, count: u32) -> CrowdLevel {
    snapshot
        .per_building_level
        .get(building_id)
        .copied()
        .unwrap_or_else(|| crowd_level(u64::from(count), 0))
}

/// One panel per important building, ascending id.
pub fn build_popup_rotation(snapshot: &Snapshot, registry: &Registry, dwell_seconds: u32) -> PopupRotation {
    let panels = registry
        .important_buildings()
        .map(|b| {
            let count = snapshot.per_building_count.get(&b.id).copied().unwrap_or(0);
            let peaks = snapshot.peaks.get(&b.id).cloned().unwrap_or_default();
            let peak_table = peaks
                .iter()
                .map(|p| PeakRow {
                    time_label: time_label(p.ts),
                    ts: p.ts,
                    count: p.count,
                })
                .collect();
            let series_24h = snapshot.history_24h.get(&b.id).cloned().unwrap_or_else(|| {
                OccupancySeries::zeros(
                    Some(b.id.clone()),
                    snapshot.total_series.bin_start,
                    snapshot.total_series.bin_width,
                    snapshot.total_series.len(),
                )
            });
            PopupPanel {
                building_id: b.id.clone(),
                name: b.name.clone(),
                category: b.category,
                count,
                level: level_of(snapshot, &b.id, count),
                series_24h,
                peak_marks: peaks,
                peak_table,
                pin: GeoPoint {
                    latitude: b.latitude,
                    longitude: b.longitude,
                },
            }
        })
        .collect();
    PopupRotation { dwell_seconds, panels }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingBar {
    pub zone_id: String,
    pub zone_name: String,
    pub total: u64,
    pub bar_color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotalsChart {
    pub history: OccupancySeries,
    pub forecast: OccupancySeries,
    /// Index of the first forecast point in history ++ forecast.
    pub boundary_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneLabel {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordChart {
    pub zones: Vec<ZoneLabel>,
    /// `matrix[i][j]` moves from `zones[i]` to `zones[j]`.
    pub matrix: Vec<Vec<u64>>,
    pub anchors: Vec<ChordAnchor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub building_id: String,
    pub name: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ladders {
    pub incoming: Vec<LadderEntry>,
    pub outgoing: Vec<LadderEntry>,
}

/// Everything the kiosk renders, in one self-contained document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayPayload {
    pub generated_at: Timestamp,
    pub map_points: Vec<MapPointEncoding>,
    pub popup_rotation: PopupRotation,
    pub zone_ranking: Vec<RankingBar>,
    pub totals: TotalsChart,
    pub chord: ChordChart,
    pub ladders: Ladders,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PayloadParams {
    pub height_scale: f64,
    pub bounce_period: f64,
    pub dwell_seconds: u32,
    pub anchor_count: usize,
}

impl Default for PayloadParams {
    fn default() -> Self {
        Self {
            height_scale: DEFAULT_HEIGHT_SCALE,
            bounce_period: DEFAULT_BOUNCE_PERIOD,
            dwell_seconds: DEFAULT_DWELL_SECONDS,
            anchor_count: DEFAULT_ANCHOR_COUNT,
        }
    }
}

/// Ranking bars share the map ramp, rescaled so the busiest zone is red.
fn bar_color(total: u64, max_total: u64) -> Rgb {
    if max_total == 0 {
        return color_for_count(0);
    }
    let scaled = (u128::from(total) * 1000 + u128::from(max_total) / 2) / u128::from(max_total);
    color_for_count(scaled as u64)
}

pub fn build_display_payload(
    snapshot: &Snapshot,
    registry: &Registry,
    params: &PayloadParams,
) -> Result<DisplayPayload, EncodingError> {
    if let Some(b) = snapshot
        .per_building_count
        .keys()
        .find(|b| registry.building(b).is_none())
    {
        return Err(EncodingError::UnknownBuilding(b.clone()));
    }

    let map_points = registry
        .buildings()
        .map(|b| {
            let count = snapshot.per_building_count.get(&b.id).copied().unwrap_or(0);
            MapPointEncoding {
                building_id: b.id.clone(),
                name: b.name.clone(),
                latitude: b.latitude,
                longitude: b.longitude,
                base_height: point_height(u64::from(count), params.height_scale),
                bounce_amplitude_ratio: BOUNCE_AMPLITUDE_RATIO,
                bounce_period: params.bounce_period,
                bounce_phase: bounce_phase(&b.id),
                color: color_for_count(u64::from(count)),
                level: level_of(snapshot, &b.id, count),
                count,
            }
        })
        .collect();

    let max_total = snapshot.zone_ranking.iter().map(|z| z.total).max().unwrap_or(0);
    let zone_ranking = snapshot
        .zone_ranking
        .iter()
        .map(|z| {
            Ok(RankingBar {
                zone_id: z.zone_id.clone(),
                zone_name: zone_name(registry, &z.zone_id)?.to_string(),
                total: z.total,
                bar_color: bar_color(z.total, max_total),
            })
        })
        .collect::<Result<_, EncodingError>>()?;

    let totals = TotalsChart {
        history: snapshot.total_series.clone(),
        forecast: snapshot.forecast_series.clone(),
        boundary_index: snapshot.total_series.len(),
    };

    let zones: Vec<ZoneLabel> = registry
        .zones()
        .map(|z| ZoneLabel {
            id: z.id.clone(),
            name: z.name.clone(),
        })
        .collect();
    let position: BTreeMap<&str, usize> = zones.iter().enumerate().map(|(i, z)| (z.id.as_str(), i)).collect();
    let mut matrix = vec![vec![0u64; zones.len()]; zones.len()];
    for ((from, to), &n) in &snapshot.movement.zone_counts {
        let i = *position
            .get(from.as_str())
            .ok_or_else(|| EncodingError::UnknownZone(from.clone()))?;
        let j = *position
            .get(to.as_str())
            .ok_or_else(|| EncodingError::UnknownZone(to.clone()))?;
        matrix[i][j] += n;
    }
    let chord = ChordChart {
        anchors: anchor_chords(&snapshot.movement, registry, params.anchor_count)?,
        zones,
        matrix,
    };

    let ladder = |entries: &[crate::analytics::FluxEntry]| -> Result<Vec<LadderEntry>, EncodingError> {
        entries
            .iter()
            .map(|e| {
                let b = registry
                    .building(&e.building_id)
                    .ok_or_else(|| EncodingError::UnknownBuilding(e.building_id.clone()))?;
                Ok(LadderEntry {
                    building_id: e.building_id.clone(),
                    name: b.name.clone(),
                    count: e.count,
                })
            })
            .collect()
    };
    let ladders = Ladders {
        incoming: ladder(&snapshot.ladder_in)?,
        outgoing: ladder(&snapshot.ladder_out)?,
    };

    Ok(DisplayPayload {
        generated_at: snapshot.at,
        map_points,
        popup_rotation: build_popup_rotation(snapshot, registry, params.dwell_seconds),
        zone_ranking,
        totals,
        chord,
        ladders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{build_snapshot, EdgeCounts, SnapshotParams};
    use crate::ingest::{AssociationEvent, EventKind, EventStream};
    use crate::testutil::tiny_registry;
    use proptest::prelude::*;

    /// Oracle: interpolate on the normalized scale v = count / 1000.
    fn reference_color(count: u64) -> (f64, f64, f64) {
        let v = count.min(1000) as f64 / 1000.0;
        let stops = [
            (0.0, (0.0, 92.0, 230.0)),
            (0.2, (0.0, 255.0, 255.0)),
            (0.5, (0.0, 200.0, 80.0)),
            (0.75, (255.0, 220.0, 0.0)),
            (1.0, (230.0, 30.0, 30.0)),
        ];
        for w in stops.windows(2) {
            let ((v0, a), (v1, b)) = (w[0], w[1]);
            if v <= v1 {
                let t = (v - v0) / (v1 - v0);
                return (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t, a.2 + (b.2 - a.2) * t);
            }
        }
        unreachable!()
    }

    #[test]
    fn color_anchors() {
        assert_eq!(color_for_count(200), Rgb(0, 255, 255));
        assert_eq!(color_for_count(1000), Rgb(230, 30, 30));
        assert_eq!(color_for_count(5000), Rgb(230, 30, 30));
        assert_eq!(color_for_count(0), Rgb(0, 92, 230));
        assert_eq!(color_for_count(600), Rgb(102, 208, 48));
    }

    #[test]
    fn heights() {
        assert_eq!(point_height(0, 0.5), 0.0);
        assert_eq!(point_height(1000, 0.5), 500.0);
        assert_eq!(point_height(200, 1.0), 200.0);
    }

    #[test]
    fn bounce_extremes() {
        // sin argument = 2π t / period + phase
        assert!((bounce_height(100.0, 0.5, 2.0, 0.0) - 120.0).abs() < 1e-9);
        assert!((bounce_height(100.0, 0.0, 2.0, -PI / 2.0) - 80.0).abs() < 1e-9);
        assert!((bounce_height(100.0, 0.0, 2.0, 0.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn phase_is_stable_and_in_range() {
        for id in ["LIB", "CANT", "X"] {
            let p = bounce_phase(id);
            assert_eq!(p, bounce_phase(id));
            assert!((0.0..TAU).contains(&p));
        }
        // FNV-1a 64 of the empty string is the offset basis.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    fn zone_matrix(edges: &[(&str, &str, u64)]) -> MovementMatrix {
        let zone_counts: EdgeCounts = edges.iter().map(|&(f, t, n)| ((f.into(), t.into()), n)).collect();
        MovementMatrix {
            zone_counts,
            ..MovementMatrix::empty(0, 3600)
        }
    }

    #[test]
    fn all_small_edge_sets_highlighted() {
        let m = zone_matrix(&[
            ("ACAD", "LIFE", 3),
            ("LIFE", "ACAD", 1),
            ("SPRT", "ACAD", 2),
            ("LIFE", "SPRT", 9),
        ]);
        let anchors = anchor_chords(&m, &tiny_registry(), 10).unwrap();
        assert_eq!(anchors.len(), 4);
        assert!(anchors.iter().all(|a| a.highlighted && !a.redundancy_text.is_empty()));
        assert_eq!(
            anchors[0].redundancy_text,
            "Campus Life → Sports: 9 moved in the last hour"
        );
    }

    #[test]
    fn zero_edges_are_omitted() {
        let m = zone_matrix(&[("ACAD", "LIFE", 0)]);
        assert!(anchor_chords(&m, &tiny_registry(), 10).unwrap().is_empty());
    }

    #[test]
    fn only_top_k_highlighted_with_tie_break() {
        let m = zone_matrix(&[("ACAD", "LIFE", 5), ("ACAD", "SPRT", 5), ("LIFE", "ACAD", 7)]);
        let anchors = anchor_chords(&m, &tiny_registry(), 2).unwrap();
        let lit: Vec<_> = anchors
            .iter()
            .filter(|a| a.highlighted)
            .map(|a| (a.from_zone.as_str(), a.to_zone.as_str()))
            .collect();
        assert_eq!(lit, [("LIFE", "ACAD"), ("ACAD", "LIFE")]);
        assert!(anchors[2].redundancy_text.is_empty());
    }

    #[test]
    fn time_labels() {
        assert_eq!(time_label(1_554_105_600), "08:00");
        assert_eq!(time_label(1_554_105_600 + 3600 * 4 + 5 * 60 + 59), "12:05");
    }

    fn sample_snapshot() -> Snapshot {
        let mut events = Vec::new();
        let base = 1_554_076_800 + 10 * 3600;
        for d in 0..12 {
            let dev = format!("d{d}");
            events.push(AssociationEvent::new(
                base + d * 60,
                &dev,
                "AP-LIB-01",
                EventKind::Connect,
            ));
            events.push(AssociationEvent::new(
                base + 1200 + d * 60,
                &dev,
                "AP-CANT-01",
                EventKind::Connect,
            ));
            events.push(AssociationEvent::new(
                base + 1500 + d * 60,
                &dev,
                "AP-CANT-01",
                EventKind::Poll,
            ));
        }
        build_snapshot(
            &EventStream::from_events(events),
            &tiny_registry(),
            base + 1900,
            &SnapshotParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn payload_covers_registry_and_is_consistent() {
        let reg = tiny_registry();
        let snap = sample_snapshot();
        let p = build_display_payload(&snap, &reg, &PayloadParams::default()).unwrap();
        assert_eq!(p.map_points.len(), reg.building_count());
        let cant = p.map_points.iter().find(|m| m.building_id == "CANT").unwrap();
        assert_eq!(cant.count, 12);
        assert_eq!(cant.base_height, 6.0);
        assert_eq!(
            p.popup_rotation
                .panels
                .iter()
                .map(|x| x.building_id.as_str())
                .collect::<Vec<_>>(),
            ["CANT", "LIB"]
        );
        assert!(p.popup_rotation.panels.iter().all(PopupPanel::is_redundant));
        assert_eq!(p.totals.boundary_index, 288);
        assert_eq!(p.chord.anchors, anchor_chords(&snap.movement, &reg, 10).unwrap());
        assert_eq!(p.chord.matrix[0][1], 12); // ACAD -> LIFE
        assert_eq!(p.ladders.incoming[0].name, "Canteen");
        assert_eq!(p.zone_ranking[0].bar_color, Rgb(230, 30, 30));
        let json = serde_json::to_string(&p).unwrap();
        let back: DisplayPayload = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn empty_payload() {
        let reg = tiny_registry();
        let snap = build_snapshot(&EventStream::default(), &reg, 1_554_076_800, &SnapshotParams::default()).unwrap();
        let p = build_display_payload(&snap, &reg, &PayloadParams::default()).unwrap();
        assert!(p
            .map_points
            .iter()
            .all(|m| m.base_height == 0.0 && m.color == Rgb(0, 92, 230)));
        assert!(p.chord.anchors.is_empty());
        assert!(p.ladders.incoming.is_empty() && p.ladders.outgoing.is_empty());
        assert!(p.zone_ranking.iter().all(|z| z.bar_color == Rgb(0, 92, 230)));
    }

    #[test]
    fn unknown_building_rejected() {
        let mut snap = sample_snapshot();
        snap.per_building_count.insert("GHOST".into(), 1);
        assert_eq!(
            build_display_payload(&snap, &tiny_registry(), &PayloadParams::default()).unwrap_err(),
            EncodingError::UnknownBuilding("GHOST".into())
        );
    }

    proptest! {
        #[test]
        fn color_tracks_reference_interpolation(count in 0u64..1500) {
            let got = color_for_count(count);
            let want = reference_color(count);
            prop_assert!((f64::from(got.0) - want.0).abs() <= 0.5 + 1e-9);
            prop_assert!((f64::from(got.1) - want.1).abs() <= 0.5 + 1e-9);
            prop_assert!((f64::from(got.2) - want.2).abs() <= 0.5 + 1e-9);
        }

        #[test]
        fn color_is_continuous(count in 0u64..1000) {
            let (a, b) = (color_for_count(count), color_for_count(count + 1));
            prop_assert!(a.0.abs_diff(b.0) <= 2 && a.1.abs_diff(b.1) <= 2 && a.2.abs_diff(b.2) <= 2);
        }

        #[test]
        fn bounce_stays_in_band(base in 0.0f64..1000.0, t in -100.0f64..100.0, phase in 0.0f64..TAU) {
            let h = bounce_height(base, t, 2.0, phase);
            prop_assert!(h >= 0.8 * base - 1e-9 && h <= 1.2 * base + 1e-9);
        }
    }
}
