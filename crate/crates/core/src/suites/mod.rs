//! Named check suites. Each suite builds its own instances from a seed,
//! runs the exact identities of one statement over them, and returns a
//! report with one line per check.

mod algebra;
mod extension;
mod ladder;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, FieldTower};

/// Every suite name, in the order `all` runs them.
pub const SUITES: [&str; 9] = [
    "hypcond",
    "isohyp",
    "norms",
    "multiplier-g",
    "symp-pfaffian",
    "orth-splus",
    "sim1",
    "main",
    "example-main",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("bad option: {0}")]
    BadOption(String),
    #[error("computation failed: {0}")]
    Computation(String),
}

impl From<FieldError> for SuiteError {
    fn from(e: FieldError) -> Self {
        SuiteError::Computation(e.to_string())
    }
}

/// Base field choice for suites that accept one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseChoice {
    Q,
    Fp(u64),
}

impl BaseChoice {
    pub fn tower(self) -> Result<FieldTower, SuiteError> {
        match self {
            BaseChoice::Q => Ok(FieldTower::rationals()),
            BaseChoice::Fp(p) => Ok(FieldTower::prime_field(p)?),
        }
    }
}

impl FromStr for BaseChoice {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "Q" {
            return Ok(BaseChoice::Q);
        }
        let p = s
            .strip_prefix("Fp:")
            .and_then(|p| p.parse::<u64>().ok())
            .ok_or_else(|| SuiteError::BadOption(format!("base {s:?} is neither Q nor Fp:p")))?;
        Ok(BaseChoice::Fp(p))
    }
}

impl fmt::Display for BaseChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseChoice::Q => write!(f, "Q"),
            BaseChoice::Fp(p) => write!(f, "Fp:{p}"),
        }
    }
}

/// Options shared by all suites; `None` means the suite's own default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    #[serde(default)]
    pub precision: Option<i64>,
    #[serde(default)]
    pub height: Option<i64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub base: Option<BaseChoice>,
    /// Values of `a₁, a₂` for `example-main`; symbolic when absent.
    #[serde(default)]
    pub specialize: Option<(i64, i64)>,
    /// Number of slots for `example-main` (at least 3).
    #[serde(default)]
    pub n: Option<usize>,
}

impl SuiteOptions {
    pub fn with_seed(seed: u64) -> Self {
        SuiteOptions {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), SuiteError> {
        let positive = |name: &str, v: Option<i64>| match v {
            Some(x) if x <= 0 => Err(SuiteError::BadOption(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("precision", self.precision)?;
        positive("height", self.height)?;
        if self.trials == Some(0) {
            return Err(SuiteError::BadOption("trials must be positive".into()));
        }
        if let Some(n) = self.n {
            if n < 3 {
                return Err(SuiteError::BadOption(format!("n must be at least 3, got {n}")));
            }
        }
        Ok(())
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// One checked statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckLine {
    /// The identity or property checked, by name.
    pub anchor: String,
    /// The instance it was checked on.
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    /// Named instance counters, e.g. how many similitudes were examined.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub options: SuiteOptions,
    pub summary: Summary,
    pub notes: Vec<String>,
    pub checks: Vec<CheckLine>,
    /// Structured evidence: witnesses, search reports, transcripts.
    pub data: BTreeMap<String, serde_json::Value>,
    pub contradiction: Option<String>,
    pub verified: bool,
}

impl SuiteReport {
    pub fn count(&self, key: &str) -> usize {
        self.summary.counts.get(key).copied().unwrap_or(0)
    }

    /// Checks whose anchor is `anchor`.
    pub fn lines<'a>(&'a self, anchor: &'a str) -> impl Iterator<Item = &'a CheckLine> + 'a {
        self.checks.iter().filter(move |c| c.anchor == anchor)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Accumulates lines while a suite runs.
pub(crate) struct Recorder {
    checks: Vec<CheckLine>,
    notes: Vec<String>,
    counts: BTreeMap<String, usize>,
    data: BTreeMap<String, serde_json::Value>,
    contradiction: Option<String>,
}

impl Recorder {
    pub(crate) fn new() -> Self {
        Recorder {
            checks: Vec::new(),
            notes: Vec::new(),
            counts: BTreeMap::new(),
            data: BTreeMap::new(),
            contradiction: None,
        }
    }

    pub(crate) fn check(
        &mut self,
        anchor: &str,
        check: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> bool {
        self.checks.push(CheckLine {
            anchor: anchor.to_string(),
            check: check.into(),
            passed,
            detail: detail.into(),
        });
        passed
    }

    /// Records an error from a computation as a failed check.
    pub(crate) fn failure(&mut self, anchor: &str, check: impl Into<String>, err: impl fmt::Display) {
        self.check(anchor, check, false, format!("error: {err}"));
    }

    pub(crate) fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub(crate) fn bump(&mut self, key: &str, by: usize) {
        *self.counts.entry(key.to_string()).or_insert(0) += by;
    }

    pub(crate) fn data(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| serde_json::Value::String(e.to_string()));
        self.data.insert(key.to_string(), v);
    }

    pub(crate) fn contradiction(&mut self, what: impl Into<String>) {
        let what = what.into();
        self.check("no contradiction", "bounded search", false, what.clone());
        self.contradiction = Some(what);
    }

    pub(crate) fn finish(self, suite: &str, options: &SuiteOptions) -> SuiteReport {
        let passed = self.checks.iter().filter(|c| c.passed).count();
        let failed = self.checks.len() - passed;
        let verified = failed == 0 && self.contradiction.is_none() && !self.checks.is_empty();
        SuiteReport {
            suite: suite.to_string(),
            seed: options.seed,
            options: options.clone(),
            summary: Summary {
                checks: self.checks.len(),
                passed,
                failed,
                counts: self.counts,
            },
            notes: self.notes,
            checks: self.checks,
            data: self.data,
            contradiction: self.contradiction,
            verified,
        }
    }
}

/// Runs one named suite.
pub fn run_suite(name: &str, options: &SuiteOptions) -> Result<SuiteReport, SuiteError> {
    options.validate()?;
    let mut rec = Recorder::new();
    match name {
        "hypcond" => extension::hypcond(options, &mut rec)?,
        "isohyp" => extension::isohyp(options, &mut rec)?,
        "norms" => extension::norms(options, &mut rec)?,
        "multiplier-g" => extension::multiplier_g(options, &mut rec)?,
        "symp-pfaffian" => algebra::symp_pfaffian(options, &mut rec)?,
        "orth-splus" => algebra::orth_splus(options, &mut rec)?,
        "sim1" => ladder::sim1(options, &mut rec)?,
        "main" => ladder::main_theorem(options, &mut rec)?,
        "example-main" => ladder::example_main(options, &mut rec)?,
        other => return Err(SuiteError::UnknownSuite(other.to_string())),
    }
    Ok(rec.finish(name, options))
}

/// Runs several suites, one thread each when `parallel` is set. Reports
/// come back in input order either way.
pub fn run_suites(names: &[String], options: &SuiteOptions, parallel: bool) -> Vec<Result<SuiteReport, SuiteError>> {
    if !parallel {
        return names.iter().map(|n| run_suite(n, options)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = names.iter().map(|n| s.spawn(move || run_suite(n, options))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(SuiteError::Computation("suite worker panicked".into())))
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_parse_and_validate() {
        assert_eq!("Q".parse::<BaseChoice>().unwrap(), BaseChoice::Q);
        assert_eq!("Fp:7".parse::<BaseChoice>().unwrap(), BaseChoice::Fp(7));
        assert!("F7".parse::<BaseChoice>().is_err());
        assert!(BaseChoice::Fp(2).tower().is_err());
        let bad = SuiteOptions {
            precision: Some(0),
            ..SuiteOptions::default()
        };
        assert!(matches!(run_suite("norms", &bad), Err(SuiteError::BadOption(_))));
        assert!(matches!(
            run_suite("nonesuch", &SuiteOptions::default()),
            Err(SuiteError::UnknownSuite(_))
        ));
    }
}
