//! Verification harness for `readchain-core`: configuration, suite runner
//! and reports.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{parse_config, ConfigError, Format, RunConfig, SequenceSpec, Suite};
pub use report::{CheckResult, Report, Status};
pub use suites::run_suite;
