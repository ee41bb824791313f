//! Fixtures shared by unit tests.

use crate::registry::Registry;

pub(crate) const TINY_REGISTRY: &str = r#"{
  "zones": [
    {"id":"ACAD","name":"Academic"},
    {"id":"LIFE","name":"Campus Life"},
    {"id":"SPRT","name":"Sports"}
  ],
  "buildings": [
    {"id":"CANT","name":"Canteen","zone_id":"LIFE","latitude":22.3350,"longitude":114.2660,"category":"canteen","important":true},
    {"id":"DORM","name":"Hall I","zone_id":"LIFE","latitude":22.3380,"longitude":114.2620,"category":"dormitory","important":false},
    {"id":"ENG","name":"Engineering","zone_id":"ACAD","latitude":22.3370,"longitude":114.2640,"category":"academic","important":false},
    {"id":"GYM","name":"Sports Centre","zone_id":"SPRT","latitude":22.3340,"longitude":114.2630,"category":"sports","important":false},
    {"id":"LIB","name":"Main Library","zone_id":"ACAD","latitude":22.3364,"longitude":114.2654,"category":"library","important":true}
  ],
  "aps": [
    {"id":"AP-CANT-01","building_id":"CANT"},
    {"id":"AP-DORM-01","building_id":"DORM"},
    {"id":"AP-ENG-01","building_id":"ENG"},
    {"id":"AP-GYM-01","building_id":"GYM"},
    {"id":"AP-LIB-01","building_id":"LIB"},
    {"id":"AP-LIB-02","building_id":"LIB"}
  ]
}"#;

pub(crate) fn tiny_registry() -> Registry {
    Registry::from_json_str(TINY_REGISTRY).expect("fixture registry is valid")
}
