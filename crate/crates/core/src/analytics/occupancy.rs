use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::session::{DeviceSession, Sessions};
use super::AnalyticsError;
use crate::registry::Registry;
use crate::Timestamp;

pub const DEFAULT_BIN_WIDTH: i64 = 300;

/// Distinct-device counts in consecutive half-open bins of `bin_width`
/// seconds starting at `bin_start`. `building_id` is `None` for the
/// campus-wide series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySeries {
    pub building_id: Option<String>,
    pub bin_start: Timestamp,
    pub bin_width: i64,
    pub counts: Vec<u32>,
}

impl OccupancySeries {
    pub fn zeros(building_id: Option<String>, bin_start: Timestamp, bin_width: i64, len: usize) -> Self {
        Self {
            building_id,
            bin_start,
            bin_width,
            counts: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Start time of bin `i`.
    pub fn bin_ts(&self, i: usize) -> Timestamp {
        self.bin_start + i as i64 * self.bin_width
    }

    /// Exclusive end of the covered span.
    pub fn span_end(&self) -> Timestamp {
        self.bin_ts(self.counts.len())
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Number of distinct devices present at each registered building at `t`.
/// Buildings with nobody present are reported as zero.
pub fn occupancy_at(sessions: &Sessions, registry: &Registry, t: Timestamp) -> BTreeMap<String, u32> {
    let mut counts: BTreeMap<String, u32> = registry.buildings().map(|b| (b.id.clone(), 0)).collect();
    for list in sessions.values() {
        let here: BTreeSet<&str> = list.iter().filter(|s| s.contains(t)).map(|s| &*s.building_id).collect();
        for b in here {
            if let Some(c) = counts.get_mut(b) {
                *c += 1;
            }
        }
    }
    counts
}

fn check_span(span_start: Timestamp, span_end: Timestamp, bin_width: i64) -> Result<usize, AnalyticsError> {
    if bin_width <= 0 || span_end <= span_start || (span_end - span_start) % bin_width != 0 {
        return Err(AnalyticsError::InvalidSpan {
            start: span_start,
            end: span_end,
            bin_width,
        });
    }
    Ok(((span_end - span_start) / bin_width) as usize)
}

/// Adds one per bin for every device with at least one session intersecting
/// that bin. Relies on each device's sessions being time-ordered.
pub(crate) fn accumulate_bins<'a>(
    per_device: impl Iterator<Item = impl Iterator<Item = &'a DeviceSession>>,
    span_start: Timestamp,
    bin_width: i64,
    counts: &mut [u32],
) {
    let n = counts.len() as i64;
    if n == 0 {
        return;
    }
    let span_end = span_start + n * bin_width;
    for sessions in per_device {
        let mut next_free: i64 = 0;
        for s in sessions {
            if s.end <= s.start || s.end <= span_start || s.start >= span_end {
                continue;
            }
            let first = (s.start.max(span_start) - span_start).div_euclid(bin_width);
            let last = ((s.end.min(span_end) - span_start - 1).div_euclid(bin_width)).min(n - 1);
            for bin in first.max(next_free)..=last {
                counts[bin as usize] += 1;
            }
            next_free = next_free.max(last + 1);
        }
    }
}

/// Per-bin distinct devices whose session at `building_id` intersects the bin.
pub fn bin_series(
    sessions: &Sessions,
    building_id: &str,
    span_start: Timestamp,
    span_end: Timestamp,
    bin_width: i64,
) -> Result<OccupancySeries, AnalyticsError> {
    let n = check_span(span_start, span_end, bin_width)?;
    let mut series = OccupancySeries::zeros(Some(building_id.to_string()), span_start, bin_width, n);
    accumulate_bins(
        sessions
            .values()
            .map(|list| list.iter().filter(move |s| &*s.building_id == building_id)),
        span_start,
        bin_width,
        &mut series.counts,
    );
    Ok(series)
}

/// Per-bin distinct devices present anywhere on campus.
pub fn campus_series(
    sessions: &Sessions,
    span_start: Timestamp,
    span_end: Timestamp,
    bin_width: i64,
) -> Result<OccupancySeries, AnalyticsError> {
    let n = check_span(span_start, span_end, bin_width)?;
    let mut series = OccupancySeries::zeros(None, span_start, bin_width, n);
    accumulate_bins(
        sessions.values().map(|list| list.iter()),
        span_start,
        bin_width,
        &mut series.counts,
    );
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::tiny_registry;
    use std::sync::Arc;

    fn sessions(spec: &[(&str, &str, i64, i64)]) -> Sessions {
        let mut out = Sessions::new();
        for &(dev, b, start, end) in spec {
            out.entry(Arc::from(dev)).or_default().push(DeviceSession {
                device_id: Arc::from(dev),
                building_id: Arc::from(b),
                start,
                end,
            });
        }
        out
    }

    #[test]
    fn no_sessions_all_zero() {
        let reg = tiny_registry();
        let occ = occupancy_at(&Sessions::new(), &reg, 100);
        assert_eq!(occ.len(), reg.building_count());
        assert!(occ.values().all(|&c| c == 0));
    }

    #[test]
    fn overlapping_devices() {
        let reg = tiny_registry();
        let s = sessions(&[("d1", "LIB", 0, 600), ("d2", "LIB", 300, 900)]);
        assert_eq!(occupancy_at(&s, &reg, 400)["LIB"], 2);
        assert_eq!(occupancy_at(&s, &reg, 700)["LIB"], 1);
        assert_eq!(occupancy_at(&s, &reg, 900)["LIB"], 0);
    }

    #[test]
    fn gap_between_sessions_counts_nowhere() {
        let reg = tiny_registry();
        let s = sessions(&[("d1", "LIB", 0, 600), ("d1", "CANT", 900, 1500)]);
        let occ = occupancy_at(&s, &reg, 750);
        assert_eq!((occ["LIB"], occ["CANT"]), (0, 0));
    }

    #[test]
    fn bins_follow_half_open_convention() {
        let s = sessions(&[("d1", "LIB", 0, 600)]);
        assert_eq!(bin_series(&s, "LIB", 0, 900, 300).unwrap().counts, [1, 1, 0]);
        let s = sessions(&[("d1", "LIB", 0, 300)]);
        assert_eq!(bin_series(&s, "LIB", 0, 900, 300).unwrap().counts, [1, 0, 0]);
        let s = Sessions::new();
        assert_eq!(bin_series(&s, "LIB", 0, 900, 300).unwrap().counts, [0, 0, 0]);
    }

    #[test]
    fn one_device_counted_once_per_bin() {
        let s = sessions(&[("d1", "LIB", 0, 100), ("d1", "LIB", 150, 200), ("d1", "CANT", 250, 400)]);
        assert_eq!(bin_series(&s, "LIB", 0, 600, 300).unwrap().counts, [1, 0]);
        assert_eq!(campus_series(&s, 0, 600, 300).unwrap().counts, [1, 1]);
    }

    #[test]
    fn sessions_outside_span_are_clipped() {
        let s = sessions(&[("d1", "LIB", -1000, 50), ("d2", "LIB", 550, 5000)]);
        assert_eq!(bin_series(&s, "LIB", 0, 600, 300).unwrap().counts, [1, 1]);
    }

    #[test]
    fn invalid_spans() {
        let s = Sessions::new();
        assert!(bin_series(&s, "LIB", 0, 0, 300).is_err());
        assert!(bin_series(&s, "LIB", 10, 0, 300).is_err());
        assert!(bin_series(&s, "LIB", 0, 500, 300).is_err());
        assert!(bin_series(&s, "LIB", 0, 600, 0).is_err());
    }
}
