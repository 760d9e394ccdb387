//! Machine-readable check reports.
//!
//! Reports are flat and self-contained: the inputs echo is enough to
//! reproduce every measured value bitwise. Floats are emitted with 17
//! significant digits so the JSON itself round-trips losslessly.

use std::fmt::Write as _;
use std::time::Instant;

use crate::field::fmt_f64;

/// Named verification result with measured values, tolerances, pass/fail
/// and convergence-order estimates.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    /// Echo of every input that determines the run, in insertion order.
    pub inputs: Vec<(String, String)>,
    pub measured: Vec<(String, f64)>,
    pub tolerances: Vec<(String, f64)>,
    /// Observed convergence orders (log2 of successive error ratios).
    pub orders: Vec<f64>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl CheckReport {
    pub fn measured(&self, key: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Serializes the report as JSON with 17-significant-digit floats.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"name\": {},", json_str(&self.name));
        out.push_str("  \"inputs\": {");
        for (k, (key, val)) in self.inputs.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "\n    {}: {}", json_str(key), json_str(val));
        }
        out.push_str(if self.inputs.is_empty() { "},\n" } else { "\n  },\n" });
        out.push_str("  \"measured\": {");
        for (k, (key, val)) in self.measured.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "\n    {}: {}", json_str(key), fmt_f64(*val));
        }
        out.push_str(if self.measured.is_empty() { "},\n" } else { "\n  },\n" });
        out.push_str("  \"tolerances\": {");
        for (k, (key, val)) in self.tolerances.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "\n    {}: {}", json_str(key), fmt_f64(*val));
        }
        out.push_str(if self.tolerances.is_empty() { "},\n" } else { "\n  },\n" });
        out.push_str("  \"orders\": [");
        for (k, v) in self.orders.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push_str("],\n");
        let _ = writeln!(out, "  \"passed\": {},", self.passed);
        let _ = writeln!(out, "  \"wall_time_s\": {}", fmt_f64(self.wall_time_s));
        out.push_str("}\n");
        out
    }

    /// One status line for terminal summaries.
    pub fn status_line(&self) -> String {
        format!("[{}] {}", if self.passed { "PASS" } else { "FAIL" }, self.name)
    }
}

/// Incremental builder; stamps the wall time when finished.
pub struct ReportBuilder {
    name: String,
    inputs: Vec<(String, String)>,
    measured: Vec<(String, f64)>,
    tolerances: Vec<(String, f64)>,
    orders: Vec<f64>,
    passed: bool,
    started: Instant,
}

impl ReportBuilder {
    pub fn new(name: &str) -> Self {
        ReportBuilder {
            name: name.to_string(),
            inputs: Vec::new(),
            measured: Vec::new(),
            tolerances: Vec::new(),
            orders: Vec::new(),
            passed: true,
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, key: &str, val: impl ToString) -> &mut Self {
        self.inputs.push((key.to_string(), val.to_string()));
        self
    }

    pub fn measure(&mut self, key: &str, val: f64) -> &mut Self {
        self.measured.push((key.to_string(), val));
        self
    }

    pub fn tolerance(&mut self, key: &str, val: f64) -> &mut Self {
        self.tolerances.push((key.to_string(), val));
        self
    }

    pub fn order(&mut self, val: f64) -> &mut Self {
        self.orders.push(val);
        self
    }

    /// Records one criterion: measured value must satisfy `ok`.
    pub fn criterion(&mut self, key: &str, val: f64, tol: f64, ok: bool) -> &mut Self {
        self.measured.push((key.to_string(), val));
        self.tolerances.push((key.to_string(), tol));
        self.passed &= ok;
        self
    }

    pub fn require(&mut self, ok: bool) -> &mut Self {
        self.passed &= ok;
        self
    }

    pub fn finish(&mut self) -> CheckReport {
        CheckReport {
            name: std::mem::take(&mut self.name),
            inputs: std::mem::take(&mut self.inputs),
            measured: std::mem::take(&mut self.measured),
            tolerances: std::mem::take(&mut self.tolerances),
            orders: std::mem::take(&mut self.orders),
            passed: self.passed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// log2 ratios of successive entries: the observed convergence orders.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| if w[1] > 0.0 && w[0] > 0.0 { (w[0] / w[1]).log2() } else { f64::INFINITY })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_parses_back_with_full_precision() {
        let mut b = ReportBuilder::new("demo-check");
        b.input("fixture", "grim:A=1,B=pi/2");
        b.input("grid", "33x33");
        b.criterion("gap", 1.0 / 3.0, 1e-3, true);
        b.measure("lhs", std::f64::consts::PI);
        b.order(2.02);
        let report = b.finish();
        let json = report.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["name"], "demo-check");
        assert_eq!(parsed["passed"], true);
        assert_eq!(parsed["measured"]["gap"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(parsed["measured"]["lhs"].as_f64().unwrap(), std::f64::consts::PI);
        assert_eq!(parsed["inputs"]["grid"], "33x33");
        assert_eq!(parsed["orders"][0].as_f64().unwrap(), 2.02);
    }

    #[test]
    fn criterion_failure_flips_passed() {
        let mut b = ReportBuilder::new("x");
        b.criterion("v", 2.0, 1.0, false);
        assert!(!b.finish().passed);
    }

    #[test]
    fn orders_from_error_sequences() {
        let o = observed_orders(&[1.0, 0.25, 0.0625]);
        assert!((o[0] - 2.0).abs() < 1e-12 && (o[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn json_strings_are_escaped() {
        let mut b = ReportBuilder::new("quote\"and\\slash");
        let r = b.finish();
        assert!(serde_json::from_str::<serde_json::Value>(&r.to_json()).is_ok());
    }
}
