use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

/// One JSON object per run. Everything except `timing_ms` is a pure
/// function of the inputs and flags.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Map<String, Value>,
    pub results: Value,
    pub timing_ms: BTreeMap<String, u64>,
    pub tool_version: String,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            config: Map::new(),
            results: Value::Null,
            timing_ms: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("config values serialize");
        self.config.insert(key.to_owned(), value);
    }

    /// Runs `stage` and records its wall time in milliseconds.
    pub fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        *self.timing_ms.entry(stage.to_owned()).or_default() += start.elapsed().as_millis() as u64;
        out
    }
}
