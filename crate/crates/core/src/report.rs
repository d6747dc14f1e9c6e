//! Run reports: one canonical JSON document per command.
//!
//! Maps are ordered, timings are omitted unless requested, and floats are
//! printed by `serde_json`, so equal inputs give byte-identical reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// The claim being tested, in words.
    pub claim: String,
    pub lhs: String,
    pub lhs_value: f64,
    pub relation: String,
    pub rhs: String,
    pub rhs_value: f64,
    /// `rhs − lhs` for `<=`, `lhs − rhs` for `>=`, `−|lhs − rhs|` for `==`.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub quantities: BTreeMap<String, f64>,
    /// Exact rational values, present only in exact mode.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exact_quantities: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(command: &str, solver: &str) -> Self {
        Report {
            format_version: REPORT_VERSION,
            command: command.into(),
            parameters: BTreeMap::new(),
            quantities: BTreeMap::new(),
            exact_quantities: BTreeMap::new(),
            witnesses: BTreeMap::new(),
            checks: Vec::new(),
            provenance: Provenance { solver: solver.into(), ..Provenance::default() },
        }
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        self.parameters.insert(name.into(), serde_json::to_value(value).expect("parameter serializes"));
    }

    pub fn quantity(&mut self, name: &str, value: f64) {
        self.quantities.insert(name.into(), value);
    }

    pub fn witness(&mut self, name: &str, value: impl Serialize) {
        self.witnesses.insert(name.into(), serde_json::to_value(value).expect("witness serializes"));
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.provenance.tolerances.insert(name.into(), value);
    }

    pub fn timing(&mut self, name: &str, ms: f64) {
        self.provenance.timings_ms.get_or_insert_with(BTreeMap::new).insert(name.into(), ms);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities.get(name).copied()
    }

    /// Records `lhs <= rhs` up to `tol`, using stored quantities.
    pub fn check_le(&mut self, claim: &str, lhs: &str, rhs: &str, tol: f64) {
        if let (Some(a), Some(b)) = (self.get(lhs), self.get(rhs)) {
            self.check_values(claim, lhs, a, "<=", rhs, b, tol);
        }
    }

    /// Records `lhs == rhs` up to `tol`, using stored quantities.
    pub fn check_eq(&mut self, claim: &str, lhs: &str, rhs: &str, tol: f64) {
        if let (Some(a), Some(b)) = (self.get(lhs), self.get(rhs)) {
            self.check_values(claim, lhs, a, "==", rhs, b, tol);
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn check_values(&mut self, claim: &str, lhs: &str, a: f64, relation: &str, rhs: &str, b: f64, tol: f64) {
        let slack = match relation {
            "<=" => b - a,
            ">=" => a - b,
            _ => -(a - b).abs(),
        };
        self.checks.push(Check {
            claim: claim.into(),
            lhs: lhs.into(),
            lhs_value: a,
            relation: relation.into(),
            rhs: rhs.into(),
            rhs_value: b,
            slack,
            pass: slack >= -tol,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Tab-separated `section  name  value` rows.
    pub fn to_table(&self) -> String {
        let mut out = String::from("section\tname\tvalue\n");
        for (k, v) in &self.parameters {
            out.push_str(&format!("parameter\t{k}\t{v}\n"));
        }
        for (k, v) in &self.quantities {
            out.push_str(&format!("quantity\t{k}\t{v}\n"));
        }
        for (k, v) in &self.exact_quantities {
            out.push_str(&format!("exact\t{k}\t{v}\n"));
        }
        for c in &self.checks {
            let name = format!("{} {} {}", c.lhs, c.relation, c.rhs);
            let status = if c.pass { "pass" } else { "fail" };
            out.push_str(&format!("check\t{name}\t{status} slack={}\n", c.slack));
        }
        out
    }
}

impl Check {
    /// One-line description naming both quantities and the claim.
    pub fn describe(&self) -> String {
        format!(
            "{} {} {} failed: {} = {}, {} = {}, slack {} ({})",
            self.lhs,
            self.relation,
            self.rhs,
            self.lhs,
            self.lhs_value,
            self.rhs,
            self.rhs_value,
            self.slack,
            self.claim
        )
    }
}
