//! Seasonal-mean forecasting.
//!
//! A future bin is predicted as the mean of past bins in the same
//! hour-of-week slot (same weekday and time of day) within the trailing
//! weeks of history. When no past week covers that slot, the same time of
//! day on any day is used; failing that, the mean of the whole window.

use super::occupancy::OccupancySeries;
use crate::{DAY, WEEK};

pub const DEFAULT_FORECAST_WEEKS: u32 = 4;

/// Integer mean rounded half-up.
fn rounded_mean(sum: u64, n: u64) -> u32 {
    ((2 * sum + n) / (2 * n)) as u32
}

/// Mean of history values at times `t - k * period`, `k >= 1`, no earlier
/// than `floor`.
fn periodic_mean(history: &OccupancySeries, t: i64, period: i64, floor: i64) -> Option<u32> {
    let w = history.bin_width;
    let (mut sum, mut n) = (0u64, 0u64);
    let mut k = 1;
    loop {
        let past = t - k * period;
        if past < floor {
            break;
        }
        let offset = past - history.bin_start;
        if offset % w == 0 {
            let idx = (offset / w) as usize;
            if idx < history.counts.len() {
                sum += u64::from(history.counts[idx]);
                n += 1;
            }
        }
        k += 1;
    }
    (n > 0).then(|| rounded_mean(sum, n))
}

/// Predicts `horizon_bins` bins following the end of `history`, using at
/// most `weeks` trailing weeks of it.
pub fn forecast_with(history: &OccupancySeries, horizon_bins: usize, weeks: u32) -> Vec<u32> {
    if history.counts.is_empty() || weeks == 0 {
        return vec![0; horizon_bins];
    }
    let w = history.bin_width;
    let end = history.span_end();
    let floor = (end - i64::from(weeks) * WEEK).max(history.bin_start);
    let first = ((floor - history.bin_start + w - 1) / w) as usize;
    let window = &history.counts[first..];
    let overall = if window.is_empty() {
        0
    } else {
        rounded_mean(window.iter().map(|&c| u64::from(c)).sum(), window.len() as u64)
    };

    (0..horizon_bins)
        .map(|b| {
            let t = end + b as i64 * w;
            periodic_mean(history, t, WEEK, floor)
                .or_else(|| periodic_mean(history, t, DAY, floor))
                .unwrap_or(overall)
        })
        .collect()
}

pub fn forecast(history: &OccupancySeries, horizon_bins: usize) -> Vec<u32> {
    forecast_with(history, horizon_bins, DEFAULT_FORECAST_WEEKS)
}

/// The forecast as a series that starts where `history` ends.
pub fn forecast_series(history: &OccupancySeries, horizon_bins: usize, weeks: u32) -> OccupancySeries {
    OccupancySeries {
        building_id: history.building_id.clone(),
        bin_start: history.span_end(),
        bin_width: history.bin_width,
        counts: forecast_with(history, horizon_bins, weeks),
    }
}
