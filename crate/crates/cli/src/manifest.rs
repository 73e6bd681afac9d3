use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::io::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    /// Valid but degenerate: empty level set, infeasible schedule, not-applicable σ.
    Degenerate,
    Violations,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub parameters: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub outputs: Vec<String>,
    pub diagnostics: BTreeMap<String, Value>,
    pub duration_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            outcome: Outcome::Ok,
            reason: None,
            parameters: BTreeMap::new(),
            input_digest: None,
            outputs: Vec::new(),
            diagnostics: BTreeMap::new(),
            duration_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn diag(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn degenerate(&mut self, reason: impl Into<String>) {
        self.outcome = Outcome::Degenerate;
        self.reason = Some(reason.into());
    }

    /// Stamps the duration and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<Outcome> {
        if let Some(t) = self.started {
            self.duration_seconds = t.elapsed().as_secs_f64();
        }
        let text = serde_json::to_string_pretty(&self)? + "\n";
        write_file(dir, "manifest.json", &text)?;
        Ok(self.outcome)
    }
}
