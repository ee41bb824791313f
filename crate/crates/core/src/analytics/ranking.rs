use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneTotal {
    pub zone_id: String,
    pub total: u64,
}

/// Sums building counts per zone, busiest first, ties by ascending zone id.
/// Every zone appears, including empty ones.
pub fn zone_ranking(counts: &BTreeMap<String, u32>, registry: &Registry) -> Result<Vec<ZoneTotal>, AnalyticsError> {
    let mut totals: BTreeMap<&str, u64> = registry.zones().map(|z| (z.id.as_str(), 0)).collect();
    for (building, &n) in counts {
        let zone = registry
            .zone_of(building)
            .map_err(|_| AnalyticsError::UnknownBuilding(building.clone()))?;
        *totals.get_mut(zone.id.as_str()).expect("zone registered") += u64::from(n);
    }
    let mut ranking: Vec<ZoneTotal> = totals
        .into_iter()
        .map(|(zone_id, total)| ZoneTotal {
            zone_id: zone_id.to_string(),
            total,
        })
        .collect();
    // Stable sort keeps the ascending-id order among ties.
    ranking.sort_by_key(|z| std::cmp::Reverse(z.total));
    Ok(ranking)
}
