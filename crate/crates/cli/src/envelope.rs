use pulse_core::{DisplayPayload, Timestamp};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

/// What the kiosk receives, over HTTP and the stream alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadEnvelope {
    pub schema_version: String,
    pub payload: DisplayPayload,
    pub virtual_now: Timestamp,
}

impl PayloadEnvelope {
    pub fn new(payload: DisplayPayload, virtual_now: Timestamp) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            payload,
            virtual_now,
        }
    }
}
