//! Verification suites: each check pins one quantitative claim with its
//! tolerance, so the CLI `verify` command and the acceptance tests share one
//! implementation.

use std::fmt;

/// Direction of a check: `measured <= bound` or `measured >= bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub sense: Sense,
    pub detail: String,
}

impl CheckResult {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound, sense: Sense::AtMost, detail: String::new() }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound, sense: Sense::AtLeast, detail: String::new() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn pass(&self) -> bool {
        self.measured.is_finite()
            && match self.sense {
                Sense::AtMost => self.measured <= self.bound,
                Sense::AtLeast => self.measured >= self.bound,
            }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.sense {
            Sense::AtMost => "<=",
            Sense::AtLeast => ">=",
        };
        let verdict = if self.pass() { "pass" } else { "FAIL" };
        write!(
            f,
            "[{verdict}] {}: {:.3e} {op} {:.3e}",
            self.name, self.measured, self.bound
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: Vec<CheckResult>,
    pub elapsed_s: f64,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(CheckResult::pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} ({:.1} s)", self.name, self.elapsed_s)?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

mod runs;
pub use runs::*;
