//! Verification reports: one record per check plus the energy ledger and
//! the settings that make the run reproducible.

use serde::{Deserialize, Serialize};

use crate::constructions::{Certificate, EnergyLedger};
use crate::hamiltonian::EnergyGrid;

use super::scenario::SCHEMA_VERSION;

/// What a check is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// An independent numerical oracle (finite differences, flows).
    Oracle,
    /// Arithmetic on recorded ledger terms.
    Ledger,
    /// The behaviour of the verifier itself.
    Verifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub basis: Basis,
    pub samples: usize,
    pub tolerance: f64,
    pub measured: f64,
    pub passed: bool,
    /// The check is meant to fail; it does not count towards the status.
    #[serde(default)]
    pub expected_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub context: String,
}

impl CheckRecord {
    pub fn new(name: &str, basis: Basis, samples: usize, tolerance: f64, measured: f64, passed: bool) -> Self {
        Self {
            name: name.into(),
            basis,
            samples,
            tolerance,
            measured,
            passed,
            expected_failure: false,
            location: None,
            context: String::new(),
        }
    }

    /// `measured < tolerance`.
    pub fn below(name: &str, basis: Basis, samples: usize, tolerance: f64, measured: f64) -> Self {
        Self::new(name, basis, samples, tolerance, measured, measured < tolerance)
    }

    /// `measured > tolerance`.
    pub fn above(name: &str, basis: Basis, samples: usize, tolerance: f64, measured: f64) -> Self {
        Self::new(name, basis, samples, tolerance, measured, measured > tolerance)
    }

    pub fn from_certificate(c: &Certificate, samples: usize) -> Self {
        Self {
            location: c.location.clone(),
            context: c.context.clone(),
            ..Self::new(&c.name, Basis::Oracle, samples, c.tolerance, c.measured, c.passed)
        }
    }

    pub fn at(mut self, location: Vec<f64>) -> Self {
        self.location = Some(location);
        self
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = context.into();
        self
    }

    pub fn expecting_failure(mut self) -> Self {
        self.expected_failure = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The scenario does not validate.
    Invalid,
    /// The construction itself raised an error.
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Invalid => 2,
            Status::Error => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<EnergyGrid>,
    pub integrator_tolerance: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub scenario: String,
    pub kind: String,
    pub counterfactual: bool,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<EnergyLedger>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<(String, f64)>,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn new(scenario: &str, kind: &str, environment: Environment) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            scenario: scenario.into(),
            kind: kind.into(),
            counterfactual: false,
            status: Status::Pass,
            error: None,
            checks: Vec::new(),
            ledger: None,
            summary: Vec::new(),
            environment,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn note(&mut self, name: &str, value: f64) {
        self.summary.push((name.into(), value));
    }

    /// Pass iff every check not marked as an expected failure passed.
    pub fn finish(&mut self) {
        let ok = self.checks.iter().filter(|c| !c.expected_failure).all(|c| c.passed);
        self.status = if ok { Status::Pass } else { Status::Fail };
    }

    pub fn failed(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.expected_failure && !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    /// One line per check.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} [{}]: {:?}\n", self.scenario, self.kind, self.status);
        if let Some(e) = &self.error {
            out.push_str(&format!("  error: {e}\n"));
        }
        for c in &self.checks {
            let mark = match (c.passed, c.expected_failure) {
                (true, false) => "ok  ",
                (false, false) => "FAIL",
                (false, true) => "xfail",
                (true, true) => "xpass",
            };
            out.push_str(&format!("  {mark} {}: {:.3e} (tolerance {:e})", c.name, c.measured, c.tolerance));
            if !c.context.is_empty() {
                out.push_str(&format!(" {}", c.context));
            }
            out.push('\n');
        }
        if let Some(l) = &self.ledger {
            for t in &l.terms {
                out.push_str(&format!("  ledger {}: {:.6} ({})\n", t.name, t.value, t.note));
            }
            out.push_str(&format!("  ledger total: {:.6}\n", l.total()));
        }
        out
    }
}
