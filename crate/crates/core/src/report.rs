//! Pass/fail/skip check reports shared by the law suites, the CLI and the
//! Python bindings.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        })
    }
}

/// One named check. `witness` is `None` exactly when the check passed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The mathematical notion the check exercises.
    #[serde(rename = "paper_ref")]
    pub concept: String,
    pub verdict: Verdict,
    pub witness: Option<String>,
}

impl Check {
    pub fn pass(name: impl Into<String>, concept: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            concept: concept.into(),
            verdict: Verdict::Pass,
            witness: None,
        }
    }

    pub fn fail(name: impl Into<String>, concept: impl Into<String>, witness: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            concept: concept.into(),
            verdict: Verdict::Fail,
            witness: Some(witness.into()),
        }
    }

    pub fn skip(name: impl Into<String>, concept: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            concept: concept.into(),
            verdict: Verdict::Skip,
            witness: Some(reason.into()),
        }
    }

    /// Pass when `witness` is `None`.
    pub fn from_witness(name: impl Into<String>, concept: impl Into<String>, witness: Option<String>) -> Self {
        match witness {
            None => Self::pass(name, concept),
            Some(w) => Self::fail(name, concept, w),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// An ordered collection of checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LawReport {
    pub checks: Vec<Check>,
}

impl LawReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: LawReport) {
        self.checks.extend(other.checks);
    }

    /// Prefixes every check name, e.g. `unit-interval/`.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.name = format!("{prefix}{}", c.name);
        }
        self
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No check failed (skips allowed).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail).collect()
    }

    pub fn sorted(mut self) -> Self {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        self
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(f, "{:<4} {}", c.verdict, c.name)?;
            if let Some(w) = &c.witness {
                write!(f, "  [{w}]")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
