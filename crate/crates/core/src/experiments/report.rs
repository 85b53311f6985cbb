use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::spectral::SpectralEstimate;

/// One measured quantity. `n` is the averaging cutoff (or the search range),
/// `index` the lag `h` or the time `n` it refers to, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: u64,
    pub index: Option<i64>,
    pub metric: String,
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowRef {
    pub metric: String,
    pub n: u64,
    pub index: Option<i64>,
}

impl RowRef {
    pub fn new(metric: &str, n: u64, index: Option<i64>) -> RowRef {
        RowRef {
            metric: metric.to_string(),
            n,
            index,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Relation::Lt => a < b,
            Relation::Le => a <= b,
            Relation::Gt => a > b,
            Relation::Ge => a >= b,
        }
    }
}

/// Right-hand side of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhs {
    Value(f64),
    /// `scale·value(row) + offset`.
    Row { row: RowRef, scale: f64, offset: f64 },
    /// `scale·error_bound` of the left-hand row.
    OwnError { scale: f64 },
}

/// An inequality between rows, re-evaluated from the rows on audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: RowRef,
    pub relation: Relation,
    pub rhs: Rhs,
    pub holds: bool,
}

/// A hypothesis that is not a row inequality, such as a classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Abstain,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Abstain => 3,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Abstain => "abstain",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedEstimate {
    pub name: String,
    pub estimate: SpectralEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub driver: String,
    /// Echo of the configuration document, filled in by the caller.
    pub config: serde_json::Value,
    /// Driver parameters as resolved.
    pub parameters: serde_json::Value,
    pub rows: Vec<Row>,
    /// Row inequalities that must hold for the assertions to apply.
    pub preconditions: Vec<Check>,
    pub requirements: Vec<Requirement>,
    /// Asserted row inequalities.
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub abstain_reason: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    /// Metric plotted against `N` in the decay table.
    pub headline: String,
    pub spectral: Vec<NamedEstimate>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(driver: &str, headline: &str) -> ExperimentReport {
        ExperimentReport {
            name: driver.to_string(),
            driver: driver.to_string(),
            config: serde_json::Value::Null,
            parameters: serde_json::Value::Null,
            rows: Vec::new(),
            preconditions: Vec::new(),
            requirements: Vec::new(),
            checks: Vec::new(),
            verdict: Verdict::Abstain,
            abstain_reason: None,
            tolerances: BTreeMap::new(),
            headline: headline.to_string(),
            spectral: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn row(&mut self, metric: &str, n: u64, index: Option<i64>, value: f64, error_bound: f64) -> RowRef {
        self.rows.push(Row {
            n,
            index,
            metric: metric.to_string(),
            value,
            error_bound,
        });
        RowRef::new(metric, n, index)
    }

    pub fn tolerance(&mut self, name: &str, value: f64) -> f64 {
        self.tolerances.insert(name.to_string(), value);
        value
    }

    pub fn find(&self, r: &RowRef) -> Option<&Row> {
        self.rows
            .iter()
            .find(|row| row.metric == r.metric && row.n == r.n && row.index == r.index)
    }

    pub fn value(&self, r: &RowRef) -> Option<f64> {
        self.find(r).map(|row| row.value)
    }

    /// Rows of one metric with no index, in order of `N`.
    pub fn series(&self, metric: &str) -> Vec<(u64, f64)> {
        let mut v: Vec<(u64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.metric == metric && r.index.is_none())
            .map(|r| (r.n, r.value))
            .collect();
        v.sort_by_key(|p| p.0);
        v
    }

    fn evaluate(&self, lhs: &RowRef, relation: Relation, rhs: &Rhs) -> bool {
        let Some(left) = self.find(lhs) else { return false };
        let right = match rhs {
            Rhs::Value(v) => Some(*v),
            Rhs::Row { row, scale, offset } => self.value(row).map(|v| scale * v + offset),
            Rhs::OwnError { scale } => Some(scale * left.error_bound),
        };
        right.is_some_and(|r| relation.holds(left.value, r))
    }

    fn make_check(&self, name: &str, lhs: RowRef, relation: Relation, rhs: Rhs) -> Check {
        let holds = self.evaluate(&lhs, relation, &rhs);
        Check {
            name: name.to_string(),
            lhs,
            relation,
            rhs,
            holds,
        }
    }

    pub fn assert(&mut self, name: &str, lhs: RowRef, relation: Relation, rhs: Rhs) -> bool {
        let c = self.make_check(name, lhs, relation, rhs);
        let holds = c.holds;
        self.checks.push(c);
        holds
    }

    pub fn precondition(&mut self, name: &str, lhs: RowRef, relation: Relation, rhs: Rhs) -> bool {
        let c = self.make_check(name, lhs, relation, rhs);
        let holds = c.holds;
        self.preconditions.push(c);
        holds
    }

    pub fn require(&mut self, name: &str, holds: bool, detail: impl Into<String>) -> bool {
        self.requirements.push(Requirement {
            name: name.to_string(),
            holds,
            detail: detail.into(),
        });
        holds
    }

    pub fn abstain(&mut self, reason: impl Into<String>) {
        if self.abstain_reason.is_none() {
            self.abstain_reason = Some(reason.into());
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn derived_verdict(&self, preconditions_hold: bool, checks_hold: bool) -> Verdict {
        if self.abstain_reason.is_some() || !preconditions_hold || !self.requirements.iter().all(|r| r.holds) {
            Verdict::Abstain
        } else if self.checks.is_empty() {
            Verdict::Abstain
        } else if checks_hold {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Sets the verdict from the recorded checks and returns the report.
    pub fn finish(mut self) -> ExperimentReport {
        let pre = self.preconditions.iter().all(|c| c.holds);
        let checks = self.checks.iter().all(|c| c.holds);
        if self.checks.is_empty() && self.abstain_reason.is_none() && pre {
            self.abstain("nothing asserted");
        }
        self.verdict = self.derived_verdict(pre, checks);
        self
    }

    /// Re-derives every check and the verdict from the rows.
    pub fn audit(&self) -> Result<(), String> {
        let mut pre = true;
        for c in &self.preconditions {
            let holds = self.evaluate(&c.lhs, c.relation, &c.rhs);
            if holds != c.holds {
                return Err(format!("precondition {} recorded {} but rows give {}", c.name, c.holds, holds));
            }
            pre &= holds;
        }
        let mut all = true;
        for c in &self.checks {
            let holds = self.evaluate(&c.lhs, c.relation, &c.rhs);
            if holds != c.holds {
                return Err(format!("check {} recorded {} but rows give {}", c.name, c.holds, holds));
            }
            all &= holds;
        }
        let v = self.derived_verdict(pre, all);
        if v != self.verdict {
            return Err(format!("verdict {} but rows give {}", self.verdict, v));
        }
        Ok(())
    }
}
