//! Run configuration: a TOML file whose keys mirror the long flags, with
//! flags taking precedence.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::errors::Validation;

/// Overlays the non-empty fields of `flags` on the config file (if any).
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Path>) -> Result<T> {
    let mut merged = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Validation::field("config", format!("cannot read {}: {e}", path.display())))?;
            let from_file: T = toml::from_str(&text).map_err(|e| Validation::field("config", e.message().to_string()))?;
            serde_json::to_value(from_file)?
        }
        None => serde_json::Value::Object(Default::default()),
    };
    if let (serde_json::Value::Object(base), serde_json::Value::Object(over)) = (&mut merged, serde_json::to_value(flags)?) {
        for (k, v) in over {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(merged).context("merging configuration")
}

pub fn required<T: Clone>(value: &Option<T>, field: &str) -> Result<T, Validation> {
    value.clone().ok_or_else(|| Validation::field(field, "is required"))
}

/// Parses `value` with `FromStr`, reporting failures against `field`.
pub fn parse_field<T: FromStr>(value: &str, field: &str) -> Result<T, Validation>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| Validation::field(field, e))
}

/// Seeds are written back to TOML, whose integers are signed 64-bit.
pub fn check_seed(seed: u64) -> Result<u64, Validation> {
    if seed > i64::MAX as u64 {
        return Err(Validation::field("seed", format!("must be at most {}", i64::MAX)));
    }
    Ok(seed)
}

pub fn parse_list(s: &str, field: &str) -> Result<Vec<usize>, Validation> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Validation::field(field, format!("'{t}' is not a non-negative integer"))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    /// Orthogonal pyramid layers.
    Pyramid,
    /// Dense layers (quantum-assisted capable).
    Qnn,
}

/// Architecture string `pyramid:a,b[,c...]` or `qnn:a,b[,c...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arch {
    pub kind: ArchKind,
    pub widths: Vec<usize>,
}

impl FromStr for Arch {
    type Err = Validation;

    fn from_str(s: &str) -> Result<Self, Validation> {
        let (kind, list) = s
            .split_once(':')
            .ok_or_else(|| Validation::field("arch", format!("'{s}' should look like pyramid:8,2 or qnn:8,4,2")))?;
        let kind = match kind {
            "pyramid" => ArchKind::Pyramid,
            "qnn" => ArchKind::Qnn,
            other => return Err(Validation::field("arch", format!("unknown architecture kind '{other}' (pyramid or qnn)"))),
        };
        let widths = parse_list(list, "arch")?;
        if widths.len() < 2 {
            return Err(Validation::field("arch", "needs at least an input and an output width"));
        }
        if widths.contains(&0) {
            return Err(Validation::field("arch", "widths must be positive"));
        }
        let last = *widths.last().unwrap_or(&0);
        if last != 1 && last != 2 {
            return Err(Validation::field("arch", format!("output width must be 1 or 2 for binary scores, got {last}")));
        }
        if kind == ArchKind::Pyramid {
            if widths[0] < 2 {
                return Err(Validation::field("arch", "pyramid input width must be at least 2"));
            }
            if widths.windows(2).any(|w| w[1] > w[0]) {
                return Err(Validation::field("arch", "pyramid widths must be non-increasing"));
            }
        }
        Ok(Arch { kind, widths })
    }
}

/// `--regime` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliRegime {
    Pyramid,
    Svb,
    Stiefel,
    Dense,
    QnnExact,
    QnnShots,
}

impl FromStr for CliRegime {
    type Err = Validation;

    fn from_str(s: &str) -> Result<Self, Validation> {
        Ok(match s {
            "pyramid" => CliRegime::Pyramid,
            "svb" => CliRegime::Svb,
            "stiefel" => CliRegime::Stiefel,
            "dense" => CliRegime::Dense,
            "qnn-exact" => CliRegime::QnnExact,
            "qnn-shots" => CliRegime::QnnShots,
            other => {
                return Err(Validation::field(
                    "regime",
                    format!("unknown regime '{other}' (pyramid, svb, stiefel, dense, qnn-exact, qnn-shots)"),
                ))
            }
        })
    }
}

impl CliRegime {
    pub fn default_for(kind: ArchKind) -> &'static str {
        match kind {
            ArchKind::Pyramid => "pyramid",
            ArchKind::Qnn => "qnn-exact",
        }
    }

    /// Checks the regime against the architecture kind.
    pub fn check(self, arch: &Arch) -> Result<(), Validation> {
        let ok = match self {
            CliRegime::Pyramid => arch.kind == ArchKind::Pyramid,
            CliRegime::Dense | CliRegime::QnnExact | CliRegime::QnnShots => arch.kind == ArchKind::Qnn,
            CliRegime::Svb | CliRegime::Stiefel => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Validation::field("regime", format!("{self:?} training does not apply to a {:?} architecture", arch.kind)))
        }
    }
}
