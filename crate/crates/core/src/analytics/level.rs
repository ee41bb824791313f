use std::fmt;

use serde::{Deserialize, Serialize};

/// Smallest baseline used when rating crowdedness, so a venue that has
/// only ever seen a handful of devices is not rated packed by a handful more.
pub const BASELINE_FLOOR: u64 = 50;

/// Ordinal crowdedness, quietest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrowdLevel {
    Quiet,
    Moderate,
    Busy,
    Crowded,
    Packed,
}

impl CrowdLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            CrowdLevel::Quiet => "quiet",
            CrowdLevel::Moderate => "moderate",
            CrowdLevel::Busy => "busy",
            CrowdLevel::Crowded => "crowded",
            CrowdLevel::Packed => "packed",
        }
    }
}

impl fmt::Display for CrowdLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rates `count` against a building's recent maximum.
///
/// With `r = count / max(baseline_max, 50)` the bands are `[0, .2)`,
/// `[.2, .4)`, `[.4, .6)`, `[.6, .8)` and `[.8, ∞)`. Compared in integers,
/// so band edges are exact.
pub fn crowd_level(count: u64, baseline_max: u64) -> CrowdLevel {
    let denom = baseline_max.max(BASELINE_FLOOR) as u128;
    let scaled = count as u128 * 5;
    if scaled < denom {
        CrowdLevel::Quiet
    } else if scaled < 2 * denom {
        CrowdLevel::Moderate
    } else if scaled < 3 * denom {
        CrowdLevel::Busy
    } else if scaled < 4 * denom {
        CrowdLevel::Crowded
    } else {
        CrowdLevel::Packed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(crowd_level(0, 0), CrowdLevel::Quiet);
        assert_eq!(crowd_level(0, 10_000), CrowdLevel::Quiet);
        assert_eq!(crowd_level(850, 1000), CrowdLevel::Packed);
        // 10 / 50 = 0.2 lands on the lower edge of Moderate.
        assert_eq!(crowd_level(10, 0), CrowdLevel::Moderate);
        assert_eq!(crowd_level(9, 0), CrowdLevel::Quiet);
    }

    #[test]
    fn band_edges() {
        let b = 1000;
        assert_eq!(crowd_level(199, b), CrowdLevel::Quiet);
        assert_eq!(crowd_level(200, b), CrowdLevel::Moderate);
        assert_eq!(crowd_level(400, b), CrowdLevel::Busy);
        assert_eq!(crowd_level(600, b), CrowdLevel::Crowded);
        assert_eq!(crowd_level(799, b), CrowdLevel::Crowded);
        assert_eq!(crowd_level(800, b), CrowdLevel::Packed);
        assert_eq!(crowd_level(5000, b), CrowdLevel::Packed);
    }

    #[test]
    fn levels_are_ordered() {
        assert!(CrowdLevel::Quiet < CrowdLevel::Moderate);
        assert!(CrowdLevel::Crowded < CrowdLevel::Packed);
    }

    proptest! {
        #[test]
        fn monotone_in_count(a in 0u64..5000, b in 0u64..5000, base in 0u64..3000) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(crowd_level(lo, base) <= crowd_level(hi, base));
        }
    }
}
