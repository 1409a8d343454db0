//! Structured check results shared by `arrangement::check_ncd` and `verify`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::poly::{rationals_to_json, Rational, RationalJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not a failure of the property, but something expected was not found
    /// (for instance a singular value without a located witness).
    Flagged,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub what: String,
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<RationalJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Witness {
    pub fn float(what: impl Into<String>, point: &[f64]) -> Self {
        Witness {
            what: what.into(),
            point: point.to_vec(),
            exact: None,
            value: None,
        }
    }

    pub fn exact(what: impl Into<String>, point: &[Rational]) -> Self {
        Witness {
            what: what.into(),
            point: point.iter().map(crate::poly::rational_to_f64).collect(),
            exact: Some(rationals_to_json(point)),
            value: None,
        }
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }
}

/// One check. Counterexamples are kept short (first few) but `failures`
/// counts all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub samples: usize,
    pub failures: usize,
    pub witnesses: Vec<Witness>,
    pub counterexamples: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

pub const MAX_LISTED: usize = 8;

impl CheckRecord {
    pub fn new(id: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            verdict: Verdict::Pass,
            tolerance: None,
            samples: 0,
            failures: 0,
            witnesses: Vec::new(),
            counterexamples: Vec::new(),
            details: Value::Null,
            wall_time_ms: None,
        }
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn witness(&mut self, w: Witness) {
        if self.witnesses.len() < MAX_LISTED {
            self.witnesses.push(w);
        }
    }

    /// Records a counterexample and marks the check failed.
    pub fn fail(&mut self, w: Witness) {
        self.failures += 1;
        self.verdict = Verdict::Fail;
        if self.counterexamples.len() < MAX_LISTED {
            self.counterexamples.push(w);
        }
    }

    pub fn flag(&mut self) {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Flagged;
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subject: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(subject: impl Into<String>, seed: u64, checks: Vec<CheckRecord>) -> Self {
        let verdict = if checks.iter().all(CheckRecord::passed) {
            Verdict::Pass
        } else if checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Flagged
        };
        Report {
            subject: subject.into(),
            seed,
            verdict,
            checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn fail_marks_and_caps() {
        let mut c = CheckRecord::new("x");
        for i in 0..20 {
            c.fail(Witness::float("bad", &[i as f64]));
        }
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.failures, 20);
        assert_eq!(c.counterexamples.len(), MAX_LISTED);
    }

    #[test]
    fn global_verdict() {
        let mut a = CheckRecord::new("a");
        let b = CheckRecord::new("b");
        assert!(Report::new("s", 1, vec![a.clone(), b.clone()]).passed());
        a.flag();
        assert_eq!(
            Report::new("s", 1, vec![a.clone(), b.clone()]).verdict,
            Verdict::Flagged
        );
        a.fail(Witness::exact("w", &[rat(1, 2)]));
        let r = Report::new("s", 1, vec![a, b]);
        assert_eq!(r.verdict, Verdict::Fail);
        let text = r.to_json();
        assert!(text.contains("\"num\": \"1\""));
        assert!(!text.contains("wall_time_ms"));
    }
}
