//! Run reports, property checks and plot-ready tables.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;

pub const TOOL: &str = "spillover";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pass/fail of one invariant with the measured quantity it was judged on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
}

impl PropertyCheck {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        PropertyCheck {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
        }
    }

    /// Passes when `measured < threshold`.
    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        PropertyCheck {
            name: name.to_string(),
            passed: measured < threshold,
            measured,
            threshold,
        }
    }

    /// Passes when `measured > threshold`.
    pub fn above(name: &str, measured: f64, threshold: f64) -> Self {
        PropertyCheck {
            name: name.to_string(),
            passed: measured > threshold,
            measured,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_digest: String,
    /// Resolved configuration without the output block.
    pub config: Value,
    pub results: Value,
    pub checks: Vec<PropertyCheck>,
    pub summary: CheckSummary,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config: &ScenarioConfig, results: Value, checks: Vec<PropertyCheck>) -> Self {
        let config = config_value(config);
        let passed = checks.iter().filter(|c| c.passed).count();
        RunReport {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            seed,
            config_digest: digest(&config),
            config,
            results,
            summary: CheckSummary {
                total: checks.len(),
                passed,
                failed: checks.len() - passed,
            },
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// The config as embedded in reports. Where and how files are written does
/// not affect results, so the output block is left out.
pub fn config_value(config: &ScenarioConfig) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Value::Object(map) = &mut v {
        map.remove("output");
    }
    v
}

pub fn digest(value: &Value) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// A flat table destined for a CSV file. Headers spell out the formula each
/// column instantiates.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len(), "table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-4 && v.abs() < 1e15) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            1e12,
            1e-300,
            -2.618033988749895,
            123456.789,
            f64::MIN_POSITIVE,
        ] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(num(9.0), "9");
        assert_eq!(num(1e-7), "1e-7");
    }

    #[test]
    fn digest_ignores_output_block() {
        let mut a = ScenarioConfig::default();
        let d = digest(&config_value(&a));
        a.output.dir = "elsewhere".into();
        assert_eq!(digest(&config_value(&a)), d);
        a.market.n = 4;
        assert_ne!(digest(&config_value(&a)), d);
    }

    #[test]
    fn csv_quotes_headers_with_commas() {
        let mut t = Table::new("t", &["a", "f(x, k)"]);
        t.push(vec!["1".into(), "2".into()]);
        let s = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(s, "a,\"f(x, k)\"\n1,2\n");
    }
}
