use std::io::Write;
use std::time::Instant;

use nonabsolute::{Mode, ScenarioSpec};
use serde::Serialize;
use serde_json::Value;

/// What a command did, with enough context to rerun it.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: &'static str,
    pub scenario: Option<ScenarioSpec>,
    /// Which input of each party is the friend input.
    pub convention: Option<&'static str>,
    pub parameters: Value,
    pub mode: Mode,
    pub tolerance: f64,
    pub results: Value,
    /// The only field that differs between identical runs.
    pub wall_time_ms: f64,
    pub version: &'static str,
}

impl RunRecord {
    pub fn new(command: &'static str, mode: Mode, started: Instant) -> Self {
        Self {
            command,
            scenario: None,
            convention: None,
            parameters: Value::Null,
            mode,
            tolerance: tolerance(mode),
            results: Value::Null,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn print(&self) {
        emit(&format!(
            "{}\n",
            serde_json::to_string_pretty(self).expect("record serializes")
        ));
    }
}

/// Writes to stdout; a reader that hangs up early is not an error.
pub fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Comparison tolerance reported with results: exact in rational mode.
pub fn tolerance(mode: Mode) -> f64 {
    match mode {
        Mode::Rational => 0.0,
        Mode::Float => 1e-9,
    }
}
