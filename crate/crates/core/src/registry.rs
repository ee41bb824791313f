//! Campus geography: functional zones, buildings and the access points
//! installed in them.
//!
//! A [`Registry`] is loaded once from a JSON file and is immutable afterwards.
//! Every cross-reference (AP → building, building → zone) is checked at load
//! time, so lookups on a loaded registry only fail for ids that were never
//! registered.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Functional category of a building; drives the icon shown on the pop-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Library,
    Canteen,
    Dormitory,
    Academic,
    Sports,
    Administration,
    Other,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Library,
        Category::Canteen,
        Category::Dormitory,
        Category::Academic,
        Category::Sports,
        Category::Administration,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Library => "library",
            Category::Canteen => "canteen",
            Category::Dormitory => "dormitory",
            Category::Academic => "academic",
            Category::Sports => "sports",
            Category::Administration => "administration",
            Category::Other => "other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub id: String,
    pub name: String,
    pub zone_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub category: Category,
    /// Member of the pop-up rotation.
    pub important: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessPoint {
    pub id: String,
    pub building_id: String,
}

/// On-disk layout: three flat arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryFile {
    pub zones: Vec<Zone>,
    pub buildings: Vec<Building>,
    pub aps: Vec<AccessPoint>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry file {path} not found")]
    FileMissing { path: String },
    #[error("failed to read registry file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("registry parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid registry: {}", .problems.join("; "))]
    Validation { problems: Vec<String> },
    #[error("unknown building {0:?}")]
    UnknownBuilding(String),
}

/// Validated campus topology. Collections are keyed and iterate in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    zones: BTreeMap<String, Zone>,
    buildings: BTreeMap<String, Building>,
    aps: BTreeMap<String, AccessPoint>,
}

impl Registry {
    /// Validates a parsed file, collecting every problem rather than stopping
    /// at the first.
    pub fn from_file(file: RegistryFile) -> Result<Self, RegistryError> {
        let mut problems = Vec::new();

        let mut zones = BTreeMap::new();
        for zone in file.zones {
            if zone.id.is_empty() {
                problems.push("zone with empty id".to_string());
                continue;
            }
            if zones.contains_key(&zone.id) {
                problems.push(format!("duplicate zone id {:?}", zone.id));
                continue;
            }
            zones.insert(zone.id.clone(), zone);
        }

        let mut buildings = BTreeMap::new();
        for b in file.buildings {
            if b.id.is_empty() {
                problems.push("building with empty id".to_string());
                continue;
            }
            if buildings.contains_key(&b.id) {
                problems.push(format!("duplicate building id {:?}", b.id));
                continue;
            }
            if !(-90.0..=90.0).contains(&b.latitude) {
                problems.push(format!("building {:?}: latitude {} out of range", b.id, b.latitude));
            }
            if !(-180.0..=180.0).contains(&b.longitude) {
                problems.push(format!("building {:?}: longitude {} out of range", b.id, b.longitude));
            }
            if !zones.contains_key(&b.zone_id) {
                problems.push(format!("building {:?} -> unknown zone {:?}", b.id, b.zone_id));
            }
            buildings.insert(b.id.clone(), b);
        }

        let mut aps = BTreeMap::new();
        for ap in file.aps {
            if ap.id.is_empty() {
                problems.push("access point with empty id".to_string());
                continue;
            }
            if aps.contains_key(&ap.id) {
                problems.push(format!("duplicate access point id {:?}", ap.id));
                continue;
            }
            if !buildings.contains_key(&ap.building_id) {
                problems.push(format!(
                    "access point {:?} -> unknown building {:?}",
                    ap.id, ap.building_id
                ));
            }
            aps.insert(ap.id.clone(), ap);
        }

        if !buildings.values().any(|b| b.important) {
            problems.push("no important facilities".to_string());
        }

        if problems.is_empty() {
            Ok(Self { zones, buildings, aps })
        } else {
            Err(RegistryError::Validation { problems })
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = serde_json::from_str(text).map_err(|e| RegistryError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn to_file(&self) -> RegistryFile {
        RegistryFile {
            zones: self.zones.values().cloned().collect(),
            buildings: self.buildings.values().cloned().collect(),
            aps: self.aps.values().cloned().collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("registry serializes")
    }

    pub fn zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones.values()
    }

    pub fn buildings(&self) -> impl Iterator<Item = &Building> {
        self.buildings.values()
    }

    pub fn access_points(&self) -> impl Iterator<Item = &AccessPoint> {
        self.aps.values()
    }

    /// Buildings in the pop-up rotation, ascending id.
    pub fn important_buildings(&self) -> impl Iterator<Item = &Building> {
        self.buildings.values().filter(|b| b.important)
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.get(id)
    }

    pub fn building(&self, id: &str) -> Option<&Building> {
        self.buildings.get(id)
    }

    pub fn access_point(&self, id: &str) -> Option<&AccessPoint> {
        self.aps.get(id)
    }

    pub fn building_of_ap(&self, ap_id: &str) -> Option<&Building> {
        self.aps.get(ap_id).and_then(|ap| self.buildings.get(&ap.building_id))
    }

    pub fn zone_of(&self, building_id: &str) -> Result<&Zone, RegistryError> {
        let building = self
            .buildings
            .get(building_id)
            .ok_or_else(|| RegistryError::UnknownBuilding(building_id.to_string()))?;
        // Validated at construction.
        Ok(&self.zones[&building.zone_id])
    }

    pub fn aps_in<'a>(&'a self, building_id: &'a str) -> impl Iterator<Item = &'a AccessPoint> + 'a {
        self.aps.values().filter(move |ap| ap.building_id == building_id)
    }

    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    pub fn building_count(&self) -> usize {
        self.buildings.len()
    }

    pub fn ap_count(&self) -> usize {
        self.aps.len()
    }
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry, RegistryError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            RegistryError::FileMissing {
                path: path.display().to_string(),
            }
        } else {
            RegistryError::Io {
                path: path.display().to_string(),
                source,
            }
        }
    })?;
    Registry::from_json_str(&text)
}

/// Free-function form of [`Registry::zone_of`].
pub fn zone_of<'r>(registry: &'r Registry, building_id: &str) -> Result<&'r Zone, RegistryError> {
    registry.zone_of(building_id)
}
