use serde::{Deserialize, Serialize};

use super::occupancy::OccupancySeries;
use crate::Timestamp;

pub const DEFAULT_PEAK_COUNT: usize = 3;
/// Six 5-minute bins: peaks closer than half an hour are merged.
pub const DEFAULT_MIN_SEPARATION_BINS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Peak {
    pub ts: Timestamp,
    pub count: u32,
}

/// Up to `k` strict local maxima, largest first.
///
/// Candidates are bins strictly greater than both neighbours (the first and
/// last bin never qualify). They are taken greedily by descending count,
/// earlier bin first on ties, and a candidate fewer than
/// `min_separation_bins` bins from an already selected peak is dropped.
pub fn detect_peaks(series: &OccupancySeries, k: usize, min_separation_bins: usize) -> Vec<Peak> {
    let c = &series.counts;
    let mut candidates: Vec<usize> = (1..c.len().saturating_sub(1))
        .filter(|&i| c[i] > c[i - 1] && c[i] > c[i + 1])
        .collect();
    candidates.sort_by(|&a, &b| c[b].cmp(&c[a]).then(a.cmp(&b)));

    let mut selected: Vec<usize> = Vec::with_capacity(k);
    for i in candidates {
        if selected.len() == k {
            break;
        }
        if selected.iter().all(|&s| s.abs_diff(i) >= min_separation_bins) {
            selected.push(i);
        }
    }
    selected
        .into_iter()
        .map(|i| Peak {
            ts: series.bin_ts(i),
            count: c[i],
        })
        .collect()
}
