use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Refused,
    Exploratory,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Refused => "refused",
            Status::Exploratory => "exploratory",
        }
    }
}

/// One check; the field set is frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub status: Status,
    pub witness: Value,
    pub duration_ms: u64,
    pub config_digest: String,
}

pub const SCOPE_NOTE: &str = "all identities are certified exactly on finite windows of size N; \
statements about bounded operators on l1 (norm bounds, convergence of series in T) are not checked";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub config_digest: String,
    pub scope: String,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn new(config: RunConfig, mut checks: Vec<CheckResult>) -> Self {
        checks.sort_by(|a, b| a.check.cmp(&b.check));
        Report {
            config_digest: config.digest(),
            config,
            scope: SCOPE_NOTE.to_string(),
            checks,
        }
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.any_fail())
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "config {} N={} m={} seed={} digest={}",
            self.config.sequence,
            self.config.n,
            self.config.m,
            self.config.seed,
            &self.config_digest[..12]
        );
        for c in &self.checks {
            let _ = write!(out, "{:<12} {}", c.status.as_str(), c.check);
            if self.config.timing {
                let _ = write!(out, " ({} ms)", c.duration_ms);
            }
            if !c.witness.is_null() {
                let _ = write!(out, "  {}", summarize(&c.witness));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "note: {}", self.scope);
        out
    }
}

/// Keeps text output to one line per check.
fn summarize(v: &Value) -> String {
    let text = v.to_string();
    if text.len() > 160 {
        format!("{}...", &text[..157])
    } else {
        text
    }
}
