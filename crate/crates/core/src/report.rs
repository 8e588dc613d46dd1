//! Report schema shared by the command-line tool and the bindings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Partial,
    Evidence,
    Refuted,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Partial => "PARTIAL",
            Status::Evidence => "EVIDENCE",
            Status::Refuted => "REFUTED",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// Whether the status reports a found failure.
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::Refuted)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub stage: String,
    pub status: Status,
    #[serde(default)]
    pub witness: Value,
}

impl Verdict {
    pub fn new(stage: impl Into<String>, status: Status, witness: Value) -> Self {
        Verdict { stage: stage.into(), status, witness }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub budgets: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Report {
            tool_version: TOOL_VERSION.to_string(),
            command: command.into(),
            seed,
            parameters: BTreeMap::new(),
            verdicts: Vec::new(),
            budgets: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.to_string(), to_value(&value));
        self
    }

    pub fn budget(&mut self, stage: &str, value: impl Serialize) -> &mut Self {
        self.budgets.insert(stage.to_string(), to_value(&value));
        self
    }

    pub fn verdict(&mut self, stage: &str, status: Status, witness: impl Serialize) -> &mut Self {
        self.verdicts.push(Verdict::new(stage, status, to_value(&witness)));
        self
    }

    /// 1 when any verdict is a failure or refutation, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status.is_failure()) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain JSON");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "catcheck {} {} (seed {})", self.tool_version, self.command, self.seed);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "  {k} = {}", compact(v));
        }
        for v in &self.verdicts {
            let _ = writeln!(out, "{:<13} {}", v.status.as_str(), v.stage);
            if !v.witness.is_null() {
                for line in text_lines(&v.witness) {
                    let _ = writeln!(out, "    {line}");
                }
            }
        }
        if !self.budgets.is_empty() {
            let _ = writeln!(out, "budgets:");
            for (k, v) in &self.budgets {
                let _ = writeln!(out, "  {k}: {}", compact(v));
            }
        }
        out
    }
}

/// Serializes to a JSON value; reals that are not finite must already use
/// the string forms of [`crate::numeric::ext_real`].
pub fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values are plain JSON")
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn text_lines(v: &Value) -> Vec<String> {
    match v {
        Value::Object(m) => m.iter().map(|(k, x)| format!("{k}: {}", compact(x))).collect(),
        other => vec![compact(other)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_exit_code() {
        let mut r = Report::new("validate", 7);
        r.param("subject", "square.json").param("mesh", 0.1 + 0.2);
        r.verdict("validate", Status::Pass, serde_json::json!({"simplexes": 2, "girth": "+inf"}));
        r.budget("distance", 0.0125);
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.exit_code(), 0);
        r.verdict("ptolemy_scan", Status::Refuted, Value::Null);
        assert_eq!(r.exit_code(), 1);
        assert!(r.to_text().contains("REFUTED       ptolemy_scan"));
    }
}
