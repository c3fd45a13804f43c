//! Machine-readable results: a JSON report per command and the marginal table as CSV.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BmgError, Result};
use crate::girsanov::Theorem6Report;

pub const REPORT_SCHEMA: &str = "bmg-report/1";

/// One checked quantity. Non-finite numbers are stored as `None`, and such a record fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<f64>>,
    pub gap: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

fn finite_vec(v: &[f64]) -> Option<Vec<f64>> {
    v.iter().all(|x| x.is_finite()).then(|| v.to_vec())
}

impl Record {
    pub fn new(name: impl Into<String>, gap: f64, tol: f64) -> Self {
        let gap = gap.is_finite().then_some(gap);
        Record { name: name.into(), case: None, lhs: None, rhs: None, pass: gap.is_some_and(|g| g <= tol), gap, tol }
    }

    pub fn sides(mut self, lhs: &[f64], rhs: &[f64]) -> Self {
        self.lhs = finite_vec(lhs);
        self.rhs = finite_vec(rhs);
        self
    }

    pub fn case(mut self, case: usize) -> Self {
        self.case = Some(case);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub command: String,
    /// Every option that shaped the run, seed included.
    pub config: BTreeMap<String, serde_json::Value>,
    pub records: Vec<Record>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
    /// Only present when timing was requested; it breaks byte-for-byte reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: BTreeMap<String, serde_json::Value>) -> Self {
        Report {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            config,
            records: Vec::new(),
            pass: true,
            error: None,
            details: None,
            wall_time_s: None,
        }
    }

    pub fn push(&mut self, record: Record) {
        self.pass &= record.pass;
        self.records.push(record);
    }

    pub fn fail_with(&mut self, error: &BmgError) {
        self.pass = false;
        self.error = Some(error.to_string());
    }

    pub fn max_gap(&self) -> Option<f64> {
        self.records.iter().map(|r| r.gap.unwrap_or(f64::INFINITY)).reduce(f64::max)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r: Report =
            serde_json::from_str(text).map_err(|e| BmgError::InvalidInput(format!("report parse error: {e}")))?;
        if r.schema != REPORT_SCHEMA {
            return Err(BmgError::InvalidInput(format!("unsupported report schema `{}`", r.schema)));
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| BmgError::InvalidInput(format!("cannot write {}: {e}", path.display()));
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// `{:.16e}`: seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Columns `time,point,m_1..m_d,q_1..q_d,gap`; `point` is the value of `w_s`.
pub fn marginal_csv(times: &[f64], t6: &Theorem6Report, dim: usize) -> String {
    let mut out = String::from("time,point");
    for side in ["m", "q"] {
        for i in 1..=dim {
            out.push_str(&format!(",{side}_{i}"));
        }
    }
    out.push_str(",gap\n");
    for row in &t6.rows {
        let mut fields = vec![fmt17(times[row.time]), fmt17(row.point)];
        fields.extend(row.m.0.iter().chain(&row.q.0).map(|&x| fmt17(x)));
        fields.push(fmt17(row.gap));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, csv: &str) -> Result<()> {
    write_file(path, csv.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_gap_fails_and_round_trips() {
        let mut r = Report::new("x", BTreeMap::new());
        r.push(Record::new("a", 0.5, 1.0).sides(&[1.0], &[f64::NAN]));
        r.push(Record::new("b", f64::NAN, 1.0));
        assert!(!r.pass);
        let back = Report::parse(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.records[0].rhs, None);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }
}
