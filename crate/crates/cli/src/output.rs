//! Report emission: aligned UTF-8 tables or versioned JSON.

use gcstar_core::{Check, Report};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub status: String,
    pub max_defect: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl From<&Check> for CheckLine {
    fn from(c: &Check) -> Self {
        CheckLine {
            name: c.name.clone(),
            status: if c.passed { "pass" } else { "fail" }.into(),
            max_defect: c.max_defect,
            witness: c.witness.clone(),
        }
    }
}

/// Timings live outside the comparable section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sections_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub schema_version: u32,
    pub command: String,
    pub input: String,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub data: Value,
    pub timing: Timing,
}

impl Output {
    pub fn new(command: &str, input: &str, mut report: Report, data: Value) -> Self {
        report.sort();
        Output {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input: input.to_string(),
            passed: report.passed(),
            checks: report.checks.iter().map(CheckLine::from).collect(),
            data,
            timing: Timing::default(),
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("output serializes") + "\n"
    }

    pub fn text(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
        let mut out = format!("{} {}\n", self.command, self.input);
        for c in &self.checks {
            let pad = " ".repeat(width - c.name.chars().count());
            let status = if c.status == "pass" { "PASS" } else { "FAIL" };
            out.push_str(&format!("  {status}  {}{pad}  {:>10.3e}", c.name, c.max_defect));
            if let Some(w) = &c.witness {
                out.push_str(&format!("  {w}"));
            }
            out.push('\n');
        }
        let n_fail = self.checks.iter().filter(|c| c.status != "pass").count();
        out.push_str(&format!("{} checks, {} failed, {:.1} ms\n", self.checks.len(), n_fail, self.timing.total_ms));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_round_trip_idempotent() {
        let mut r = Report::new();
        r.push(Check::defect("b", 1e-13, 1e-9));
        r.push(Check::flag("a", false).with_witness("x"));
        let o = Output::new("cmd", "in", r, json!({"k": [1, 2]}));
        let s1 = o.json();
        let back: Output = serde_json::from_str(&s1).unwrap();
        assert_eq!(back.json(), s1);
        assert_eq!(back.checks[0].name, "a");
        assert!(!back.passed);
    }

    #[test]
    fn text_is_aligned() {
        let mut r = Report::new();
        r.push(Check::flag("ρ(xy) = ρ(x)ρ(y)", true));
        r.push(Check::flag("short", true));
        let t = Output::new("c", "i", r, Value::Null).text();
        let cols: Vec<usize> = t.lines().skip(1).take(2).map(|l| l.find("0.000e0").map(|b| l[..b].chars().count()).unwrap()).collect();
        assert_eq!(cols[0], cols[1]);
    }
}
