//! Structured results of verification runs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::Mode;

/// Outcome of checking one identity, possibly over many instances.
///
/// Maps are ordered so that serialized reports are byte-reproducible.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub identity: String,
    pub params: BTreeMap<String, String>,
    pub mode: Mode,
    pub pass: bool,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub truncation: BTreeMap<String, u64>,
}

impl Report {
    /// Exact check: passes when no instance failed; the first failure is the witness.
    pub fn exact(identity: impl Into<String>, checked: usize, failures: &[String]) -> Self {
        Report {
            identity: identity.into(),
            params: BTreeMap::new(),
            mode: Mode::Exact,
            pass: failures.is_empty(),
            checked,
            residual: None,
            tolerance: None,
            witness: failures.first().cloned(),
            truncation: BTreeMap::new(),
        }
    }

    /// Numeric check: passes when `residual ≤ tolerance`.
    pub fn numeric(identity: impl Into<String>, checked: usize, residual: f64, tolerance: f64) -> Self {
        Report {
            identity: identity.into(),
            params: BTreeMap::new(),
            mode: Mode::Float,
            pass: residual <= tolerance,
            checked,
            residual: Some(residual),
            tolerance: Some(tolerance),
            witness: None,
            truncation: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn trunc(mut self, key: &str, value: u64) -> Self {
        self.truncation.insert(key.to_string(), value);
        self
    }

    pub fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }
}

/// Largest residual over a batch of numeric checks, with its label.
pub fn worst<'a, I: IntoIterator<Item = (&'a str, f64)>>(items: I) -> (String, f64) {
    let mut out = (String::new(), 0.0f64);
    for (k, v) in items {
        if v.is_nan() || v > out.1 {
            out = (k.to_string(), v);
            if v.is_nan() {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_reports_first_failure() {
        let r = Report::exact("x", 3, &["a".into(), "b".into()]);
        assert!(!r.pass);
        assert_eq!(r.witness.as_deref(), Some("a"));
        assert!(Report::exact("x", 3, &[]).pass);
    }

    #[test]
    fn numeric_threshold() {
        assert!(Report::numeric("x", 1, 1e-9, 1e-8).pass);
        assert!(!Report::numeric("x", 1, 1e-7, 1e-8).pass);
        assert!(!Report::numeric("x", 1, f64::NAN, 1e-8).pass);
    }

    #[test]
    fn worst_picks_max_and_nan() {
        let w = worst([("a", 1e-9), ("b", 1e-3), ("c", 1e-5)]);
        assert_eq!(w.0, "b");
        let w = worst([("a", 1e-9), ("b", f64::NAN), ("c", 1.0)]);
        assert_eq!(w.0, "b");
    }
}
