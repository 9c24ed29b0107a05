//! Run reports: one JSON document, with a text rendering of the same values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// The command finished and every check it ran passed.
    Completed,
    Feasible,
    Infeasible,
    Undecided,
    Verified,
    VerificationFailed,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed | RunStatus::Feasible | RunStatus::Infeasible | RunStatus::Verified => 0,
            RunStatus::Undecided => 2,
            RunStatus::VerificationFailed => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub status: RunStatus,
    /// Named summaries (certificate residuals, solver diagnostics, ...).
    pub summaries: BTreeMap<String, Value>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            command: command.into(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            status: RunStatus::Completed,
            summaries: BTreeMap::new(),
            timings: BTreeMap::new(),
            artifacts: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn summary(&mut self, name: &str, value: &impl Serialize) {
        self.summaries.insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    /// Text form: every leaf of the JSON document on its own `path = value` line.
    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).unwrap_or(Value::Null);
        let mut out = String::new();
        flatten(&mut out, "", &v);
        out
    }

    /// Write `report.json` and `report.txt` into `out`.
    pub fn write(&mut self, out: &Path) -> Result<()> {
        for name in ["report.json", "report.txt"] {
            if !self.artifacts.iter().any(|a| a == name) {
                self.artifacts.push(name.into());
            }
        }
        io::write_json(&out.join("report.json"), self)?;
        io::write_atomic(&out.join("report.txt"), self.to_text().as_bytes())
    }
}

fn flatten(out: &mut String, prefix: &str, v: &Value) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(out, &p, x);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(Value::to_string).collect();
            let _ = writeln!(out, "{prefix} = [{}]", items.join(", "));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(out, &format!("{prefix}[{i}]"), x);
            }
        }
        _ => {
            let _ = writeln!(out, "{prefix} = {v}");
        }
    }
}
