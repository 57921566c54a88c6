//! Named checks with defects and witnesses.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest observed defect; zero for purely combinatorial checks.
    pub max_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

impl Check {
    /// Numerical check: passes iff `defect <= tol` (NaN fails).
    pub fn defect(name: impl Into<String>, defect: f64, tol: f64) -> Self {
        Check { name: name.into(), passed: defect <= tol, max_defect: defect, witness: None }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed, max_defect: 0.0, witness: None }
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn witness_if_failed(mut self, w: impl FnOnce() -> String) -> Self {
        if !self.passed {
            self.witness = Some(w());
        }
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {}  max_defect={:.3e}", self.name, self.max_defect)?;
        if let Some(w) = &self.witness {
            write!(f, "  witness: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Appends every check of `other`, prefixing names with `prefix/`.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            if !prefix.is_empty() {
                c.name = format!("{prefix}/{}", c.name);
            }
            self.checks.push(c);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn max_defect(&self) -> f64 {
        self.checks.iter().map(|c| c.max_defect).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn sort(&mut self) {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
    }

    /// Collapses the report into one check: passes iff all pass, defect is
    /// the max, witness is the first failure's name and witness.
    pub fn summarize(&self, name: impl Into<String>) -> Check {
        let mut c = Check { name: name.into(), passed: self.passed(), max_defect: self.max_defect(), witness: None };
        if let Some(f) = self.failures().next() {
            c.witness = Some(match &f.witness {
                Some(w) => format!("{}: {w}", f.name),
                None => f.name.clone(),
            });
        }
        c
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_defect_fails() {
        assert!(!Check::defect("x", f64::NAN, 1.0).passed);
    }

    #[test]
    fn summarize_reports_first_failure() {
        let mut r = Report::new();
        r.push(Check::defect("a", 0.0, 1e-9));
        r.push(Check::flag("b", false).with_witness("(g,h)"));
        let s = r.summarize("all");
        assert!(!s.passed);
        assert_eq!(s.witness.as_deref(), Some("b: (g,h)"));
    }
}
