use std::fmt::Write as _;

use num_rational::Rational64;
use serde::Serialize;

/// What a measured value is compared against.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    AtMost(f64),
    AtLeast(f64),
    /// Exact rational equality, written as `p/q`.
    Equals(String),
    Within { lower: f64, upper: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub threshold: Threshold,
    pub pass: bool,
}

fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, exact: None, threshold: Threshold::AtMost(limit), pass: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, exact: None, threshold: Threshold::AtLeast(limit), pass: value >= limit }
    }

    pub fn exact(name: impl Into<String>, value: Rational64, expected: Rational64) -> Self {
        Self {
            name: name.into(),
            value: to_f64(value),
            exact: Some(value.to_string()),
            threshold: Threshold::Equals(expected.to_string()),
            pass: value == expected,
        }
    }

    /// Exact value bounded above by an exact limit.
    pub fn exact_at_most(name: impl Into<String>, value: Rational64, limit: Rational64) -> Self {
        Self {
            name: name.into(),
            value: to_f64(value),
            exact: Some(value.to_string()),
            threshold: Threshold::AtMost(to_f64(limit)),
            pass: value <= limit,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            exact: None,
            threshold: Threshold::Within { lower, upper },
            pass: lower <= value && value <= upper,
        }
    }

    /// A condition that either holds (value 1) or not (value 0).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            exact: None,
            threshold: Threshold::Equals("1".into()),
            pass: ok,
        }
    }

    fn threshold_text(&self) -> String {
        match &self.threshold {
            Threshold::AtMost(t) => format!("<= {t:e}"),
            Threshold::AtLeast(t) => format!(">= {t}"),
            Threshold::Equals(e) => format!("== {e}"),
            Threshold::Within { lower, upper } => format!("in [{lower:.6}, {upper:.6}]"),
        }
    }
}

/// Informational value without a pass criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    pub pass: bool,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        Self { command, seed, checks: Vec::new(), measurements: Vec::new(), notes: Vec::new(), pass: true, wall_time_ms: 0 }
    }

    pub fn check(&mut self, mut c: Check) {
        c.value += 0.0;
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        // adding +0.0 turns -0.0 into 0.0
        self.measurements.push(Measurement { name: name.into(), value: value + 0.0, exact: None });
    }

    pub fn measure_exact(&mut self, name: impl Into<String>, value: Rational64) {
        self.measurements.push(Measurement { name: name.into(), value: to_f64(value), exact: Some(value.to_string()) });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "coinzk {}  (seed {})", self.command.join(" "), self.seed);
        for c in &self.checks {
            let value = match &c.exact {
                Some(e) => format!("{e} ({:.6e})", c.value),
                None => format!("{:.6e}", c.value),
            };
            let _ = writeln!(out, "  {} {:<40} {}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, value, c.threshold_text());
        }
        for m in &self.measurements {
            match &m.exact {
                Some(e) => {
                    let _ = writeln!(out, "  ---- {:<40} {e} ({:.6e})", m.name, m.value);
                }
                None => {
                    let _ = writeln!(out, "  ---- {:<40} {:.6e}", m.name, m.value);
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let _ = writeln!(out, "{} ({} ms)", if self.pass { "all checks passed" } else { "some checks FAILED" }, self.wall_time_ms);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_checks() {
        let mut r = RunReport::new(vec!["x".into()], 0);
        r.check(Check::at_most("a", 0.1, 0.2));
        assert!(r.pass);
        r.check(Check::exact("b", Rational64::new(1, 4), Rational64::new(1, 2)));
        assert!(!r.pass);
        assert!(r.to_json().contains("\"equals\": \"1/2\""));
    }
}
