//! Run configuration: `key=value` lines, later keys override earlier ones.
//!
//! ```text
//! d=2,4,8,10            # or: rule=geometric:<first_a>:<ratio>:<blocks>
//! N=36
//! m=2
//! precision=128
//! seed=0
//! suites=chain-commutators,ttilde-shift
//! format=json
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use readchain_core::GrowthSequence;

pub const DEFAULT_PRECISION: u32 = 128;
pub const PRECISION_CAP: u32 = 4096;
pub const DEFAULT_CASES: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("sequence required (give d=... or rule=...)")]
    MissingSequence,
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("invalid sequence {seq}: {}", .violations.join("; "))]
    InvalidSequence {
        seq: String,
        violations: Vec<String>,
    },
    #[error("window N={n} exceeds v_M + 1 = {limit}")]
    WindowTooLarge { n: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceSpec {
    Explicit {
        d: Vec<u64>,
    },
    Geometric {
        first_a: u64,
        ratio: u64,
        blocks: usize,
    },
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Explicit { d } => {
                let parts: Vec<String> = d.iter().map(u64::to_string).collect();
                write!(f, "d={}", parts.join(","))
            }
            SequenceSpec::Geometric {
                first_a,
                ratio,
                blocks,
            } => {
                write!(f, "rule=geometric:{first_a}:{ratio}:{blocks}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ClassifyPartition,
    BasisInverse,
    S2ClosedForm,
    ChainCommutators,
    NonScalarity,
    TtildeShift,
    ToeplitzLemma,
    CommutantRoundtrip,
    NormScan,
    NumericConsistency,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::ClassifyPartition,
        Suite::BasisInverse,
        Suite::S2ClosedForm,
        Suite::ChainCommutators,
        Suite::NonScalarity,
        Suite::TtildeShift,
        Suite::ToeplitzLemma,
        Suite::CommutantRoundtrip,
        Suite::NormScan,
        Suite::NumericConsistency,
    ];

    pub const CHAIN: [Suite; 3] = [
        Suite::S2ClosedForm,
        Suite::ChainCommutators,
        Suite::NonScalarity,
    ];

    pub const COMMUTANT: [Suite; 3] = [
        Suite::TtildeShift,
        Suite::ToeplitzLemma,
        Suite::CommutantRoundtrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ClassifyPartition => "classify-partition",
            Suite::BasisInverse => "basis-inverse",
            Suite::S2ClosedForm => "s2-closed-form",
            Suite::ChainCommutators => "chain-commutators",
            Suite::NonScalarity => "non-scalarity",
            Suite::TtildeShift => "ttilde-shift",
            Suite::ToeplitzLemma => "toeplitz-lemma",
            Suite::CommutantRoundtrip => "commutant-roundtrip",
            Suite::NormScan => "norm-scan",
            Suite::NumericConsistency => "numeric-consistency",
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sequence: SequenceSpec,
    /// Window size; defaults to `v_M`.
    pub n: usize,
    pub m: u64,
    pub precision_bits: u32,
    pub precision_cap: u32,
    pub suites: Vec<Suite>,
    pub format: Format,
    pub seed: u64,
    /// Number of random cases for the property suites.
    pub cases: usize,
    /// Record wall-clock durations; off keeps reports byte-identical.
    pub timing: bool,
}

impl RunConfig {
    pub fn growth_sequence(&self) -> GrowthSequence {
        expand(&self.sequence).expect("checked when parsed")
    }

    /// Structural validity of the sequence plus the window bound.
    pub fn check(&self) -> Result<(), ConfigError> {
        let seq = self.growth_sequence();
        let violations = seq.violations();
        if !violations.is_empty() {
            return Err(ConfigError::InvalidSequence {
                seq: seq.to_string(),
                violations: violations.iter().map(|v| v.to_string()).collect(),
            });
        }
        let limit = seq.max_index() + 1;
        if self.n == 0 || self.n > limit {
            return Err(ConfigError::WindowTooLarge { n: self.n, limit });
        }
        Ok(())
    }

    /// Canonical `key=value` text; input to the digest.
    pub fn canonical_text(&self) -> String {
        let suites: Vec<&str> = self.suites.iter().map(|s| s.name()).collect();
        format!(
            "{}\nN={}\nm={}\nprecision={}\nprecision_cap={}\nsuites={}\nseed={}\ncases={}\n",
            self.sequence,
            self.n,
            self.m,
            self.precision_bits,
            self.precision_cap,
            suites.join(","),
            self.seed,
            self.cases,
        )
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_text().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn expand(spec: &SequenceSpec) -> Result<GrowthSequence, ConfigError> {
    let res = match spec {
        SequenceSpec::Explicit { d } => GrowthSequence::from_interleaved(d),
        SequenceSpec::Geometric {
            first_a,
            ratio,
            blocks,
        } => GrowthSequence::geometric(*first_a, *ratio, *blocks),
    };
    res.map_err(|e| ConfigError::BadValue {
        key: "sequence".into(),
        reason: e.to_string(),
    })
}

fn bad(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| bad(key, e))
}

fn parse_rule(value: &str) -> Result<SequenceSpec, ConfigError> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        ["geometric", first_a, ratio, blocks] => Ok(SequenceSpec::Geometric {
            first_a: parse_num("rule", first_a)?,
            ratio: parse_num("rule", ratio)?,
            blocks: parse_num("rule", blocks)?,
        }),
        _ => Err(bad("rule", "expected geometric:<first_a>:<ratio>:<blocks>")),
    }
}

/// Parses configuration text and applies defaults. An explicit sequence
/// that is structurally invalid still parses (see [`RunConfig::check`]);
/// a rule whose expansion is invalid is rejected here.
pub fn parse_config(source: &str) -> Result<RunConfig, ConfigError> {
    let mut sequence = None;
    let mut n = None;
    let mut m = 2u64;
    let mut precision_bits = DEFAULT_PRECISION;
    let mut precision_cap = PRECISION_CAP;
    let mut suites = Suite::ALL.to_vec();
    let mut format = Format::Text;
    let mut seed = 0u64;
    let mut cases = DEFAULT_CASES;
    let mut timing = false;

    for (k, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: k + 1,
            text: raw.to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "d" => {
                let d = value
                    .split(',')
                    .map(|t| parse_num::<u64>("d", t.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                sequence = Some(SequenceSpec::Explicit { d });
            }
            "rule" => sequence = Some(parse_rule(value)?),
            "N" => n = Some(parse_num("N", value)?),
            "m" => {
                m = parse_num("m", value)?;
                if m == 0 {
                    return Err(bad("m", "modulus must be positive"));
                }
            }
            "precision" => precision_bits = parse_num("precision", value)?,
            "precision_cap" => precision_cap = parse_num("precision_cap", value)?,
            "suites" => {
                suites = if value == "all" {
                    Suite::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|s| s.trim().parse::<Suite>().map_err(|e| bad("suites", e)))
                        .collect::<Result<Vec<_>, _>>()?
                };
                suites.sort();
                suites.dedup();
            }
            "format" => format = value.parse().map_err(|e| bad("format", e))?,
            "seed" => seed = parse_num("seed", value)?,
            "cases" => cases = parse_num("cases", value)?,
            "timing" => timing = parse_num("timing", value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
    }

    let sequence = sequence.ok_or(ConfigError::MissingSequence)?;
    let seq = expand(&sequence)?;
    if let SequenceSpec::Geometric { .. } = sequence {
        let violations = seq.violations();
        if !violations.is_empty() {
            return Err(ConfigError::InvalidSequence {
                seq: seq.to_string(),
                violations: violations.iter().map(|v| v.to_string()).collect(),
            });
        }
    }
    if precision_bits < 16 {
        return Err(bad("precision", "at least 16 bits"));
    }
    let precision_cap = precision_cap.min(PRECISION_CAP).max(precision_bits);
    Ok(RunConfig {
        n: n.unwrap_or_else(|| seq.max_index().max(1)),
        sequence,
        m,
        precision_bits,
        precision_cap,
        suites,
        format,
        seed,
        cases,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_config() {
        let c = parse_config("d=2,4,8,10\nN=36\nm=2").unwrap();
        assert_eq!(c.n, 36);
        assert_eq!(c.m, 2);
        assert_eq!(c.precision_bits, DEFAULT_PRECISION);
        assert_eq!(c.suites, Suite::ALL.to_vec());
        assert!(c.check().is_ok());
    }

    #[test]
    fn invalid_explicit_sequence_surfaces_on_check() {
        let c = parse_config("d=2,4,6,10").unwrap();
        match c.check() {
            Err(ConfigError::InvalidSequence { violations, .. }) => {
                assert!(violations[0].contains("a_2=6 <= v_1=6"), "{violations:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors() {
        assert_eq!(parse_config("N=5"), Err(ConfigError::MissingSequence));
        assert!(matches!(
            parse_config("d=2,x"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            parse_config("d=2,4\nfoo=1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            parse_config("d 2,4"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("d=2,4\nm=0"),
            Err(ConfigError::BadValue { .. })
        ));
        // ratio 2 grows too slowly for a third block
        assert!(matches!(
            parse_config("rule=geometric:2:2:3"),
            Err(ConfigError::InvalidSequence { .. })
        ));
        let c = parse_config("d=2,4,8,10\nN=40").unwrap();
        assert_eq!(
            c.check(),
            Err(ConfigError::WindowTooLarge { n: 40, limit: 37 })
        );
    }

    #[test]
    fn rule_and_overrides() {
        let c =
            parse_config("rule=geometric:4:4:2\nm=4\nsuites=norm-scan,ttilde-shift\nm=2").unwrap();
        assert_eq!(c.growth_sequence().interleaved(), vec![4, 16, 64, 256]);
        assert_eq!(c.m, 2);
        assert_eq!(c.suites, vec![Suite::TtildeShift, Suite::NormScan]);
        assert_eq!(c.n, 640);
    }

    #[test]
    fn digest_is_stable() {
        let a = parse_config("d=2,4,8,10\nN=36").unwrap();
        let b = parse_config("# comment\nN=36\nd=2,4,8,10\nformat=json").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(
            a.digest(),
            parse_config("d=2,4,8,10\nN=35").unwrap().digest()
        );
    }
}
