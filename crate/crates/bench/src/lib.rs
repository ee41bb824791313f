//! Shared fixtures for the pipeline benchmarks.

use pulse_core::ingest::write_log_to;
use pulse_core::{generate, EventStream, Registry, SimConfig, DAY, HOUR};

pub const CAMPUS_JSON: &str = include_str!("../../../data/campus.json");

pub fn campus() -> Registry {
    Registry::from_json_str(CAMPUS_JSON).expect("bundled registry is valid")
}

pub struct Fixture {
    pub registry: Registry,
    pub stream: EventStream,
    /// The log as written to disk.
    pub text: Vec<u8>,
    pub config: SimConfig,
}

impl Fixture {
    pub fn new(devices: u32, days: u32) -> Self {
        let registry = campus();
        let config = SimConfig::new(devices, days, 42);
        let stream = generate(&config, &registry).expect("bundled registry supports the simulator");
        let mut text = Vec::new();
        write_log_to(stream.events(), &mut text).expect("in-memory write");
        Self {
            registry,
            stream,
            text,
            config,
        }
    }

    /// Lunchtime on the last simulated day.
    pub fn busy_instant(&self) -> i64 {
        self.config.start_ts + i64::from(self.config.days - 1) * DAY + 12 * HOUR + 30 * 60
    }
}
