//! JSON instance files.
//!
//! ```json
//! {
//!   "exponents": { "p": 2, "q": 2, "r": 1, "alpha": 1 },
//!   "family": { "kind": "chain", "depth": 4 },
//!   "omega": { "kind": "power", "beta": -0.5 },
//!   "sigma": { "kind": "piecewise", "depth": 1, "values": [1, 2] },
//!   "options": { "seed": 0, "restarts": 16, "tol": 1e-8, "depth": 10 }
//! }
//! ```
//!
//! Explicit families list members as `[level, position]` pairs and may
//! declare a sparsity constant `eta`; otherwise the packing certificate
//! supplies it.

use std::fmt;

use serde::{Deserialize, Serialize};
use sparselab::dyadic::{chain_family, DyadicInterval, SparseFamily};
use sparselab::operator::AscentOptions;
use sparselab::testing::Instance;
use sparselab::weights::{ExponentConfig, Weight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub exponents: ExponentsSpec,
    pub family: FamilySpec,
    pub omega: WeightSpec,
    pub sigma: WeightSpec,
    #[serde(default)]
    pub options: OptionsSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSpec {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Chain {
        depth: u32,
    },
    Explicit {
        members: Vec<(u32, u64)>,
        #[serde(default)]
        eta: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    Power {
        beta: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    Piecewise {
        depth: u32,
        values: Vec<f64>,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsSpec {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Depth of the truncated maximal function used for `A∞`.
    pub depth: u32,
}

/// Default truncation depth for `A∞` characteristics.
pub const DEFAULT_DEPTH: u32 = 10;

impl Default for OptionsSpec {
    fn default() -> Self {
        let a = AscentOptions::default();
        Self {
            seed: a.seed,
            restarts: a.restarts,
            max_iters: a.max_iters,
            tol: a.tol,
            depth: DEFAULT_DEPTH,
        }
    }
}

impl OptionsSpec {
    pub fn ascent(&self) -> AscentOptions {
        AscentOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

/// A JSON syntax or schema error, with the path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "instance file: {}", self.message)
        } else {
            write!(f, "instance file, field `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let outer = ParseError {
                path: path.clone(),
                message: e.inner().to_string(),
            };
            serde_json::from_str::<serde_json::Value>(text)
                .ok()
                .and_then(|v| refine_tagged(&path, v.get(&path)?))
                .unwrap_or(outer)
        })
    }

    /// Validates the parsed values and builds the instance; errors name the
    /// offending field.
    pub fn build(&self) -> sparselab::Result<Instance> {
        let ExponentsSpec { p, q, r, alpha } = self.exponents;
        let cfg = ExponentConfig::new(p, q, r, alpha).map_err(|e| field("exponents", e))?;
        let family = match &self.family {
            FamilySpec::Chain { depth } => chain_family(*depth),
            FamilySpec::Explicit { members, eta } => members
                .iter()
                .map(|&(level, position)| DyadicInterval::new(level, position))
                .collect::<sparselab::Result<Vec<_>>>()
                .and_then(|m| match eta {
                    Some(eta) => SparseFamily::new(m, *eta),
                    None => SparseFamily::certified(m),
                }),
        }
        .map_err(|e| field("family", e))?;
        Ok(Instance {
            family,
            cfg,
            omega: self.omega.build().map_err(|e| field("omega", e))?,
            sigma: self.sigma.build().map_err(|e| field("sigma", e))?,
        })
    }
}

impl WeightSpec {
    pub fn build(&self) -> sparselab::Result<Weight> {
        match self {
            WeightSpec::Power { beta, scale } => Weight::scaled_power(*scale, *beta),
            WeightSpec::Piecewise { depth, values } => {
                if values.len() as u128 != 1u128 << (*depth).min(64) {
                    return Err(sparselab::Error::Parameter(format!(
                        "piecewise weight at depth {depth} needs {} values, got {}",
                        1u128 << (*depth).min(64),
                        values.len()
                    )));
                }
                Weight::uniform_piecewise(*depth, values.clone())
            }
        }
    }
}

// Internally tagged enums buffer their content, so a bad field inside a
// variant is reported at the enum. Re-reading the variant's fields on their
// own recovers the full path.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ChainFields {
    kind: String,
    depth: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ExplicitFields {
    kind: String,
    members: Vec<(u32, u64)>,
    #[serde(default)]
    eta: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct PowerFields {
    kind: String,
    beta: f64,
    #[serde(default)]
    scale: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct PiecewiseFields {
    kind: String,
    depth: u32,
    values: Vec<f64>,
}

fn refine_tagged(prefix: &str, value: &serde_json::Value) -> Option<ParseError> {
    fn inner<T: serde::de::DeserializeOwned>(
        prefix: &str,
        value: &serde_json::Value,
    ) -> Option<ParseError> {
        let e = serde_path_to_error::deserialize::<_, T>(value).err()?;
        let path = e.path().to_string();
        Some(ParseError {
            path: if path == "." {
                prefix.to_string()
            } else {
                format!("{prefix}.{path}")
            },
            message: e.inner().to_string(),
        })
    }
    match (prefix, value.get("kind")?.as_str()?) {
        ("family", "chain") => inner::<ChainFields>(prefix, value),
        ("family", "explicit") => inner::<ExplicitFields>(prefix, value),
        ("omega" | "sigma", "power") => inner::<PowerFields>(prefix, value),
        ("omega" | "sigma", "piecewise") => inner::<PiecewiseFields>(prefix, value),
        _ => None,
    }
}

fn field(name: &str, e: sparselab::Error) -> sparselab::Error {
    use sparselab::Error::*;
    match e {
        Parameter(m) => Parameter(format!("{name}: {m}")),
        Degenerate(m) => Degenerate(format!("{name}: {m}")),
        PartitionMismatch(m) => PartitionMismatch(format!("{name}: {m}")),
        Precondition(m) => Precondition(format!("{name}: {m}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "exponents": { "p": 2, "q": 2, "r": 1, "alpha": 1 },
        "family": { "kind": "explicit", "members": [[0, 0], [1, 0]] },
        "omega": { "kind": "power", "beta": -0.5 },
        "sigma": { "kind": "piecewise", "depth": 1, "values": [1, 2] }
    }"#;

    #[test]
    fn parses_and_builds() {
        let file = InstanceFile::parse(SAMPLE).unwrap();
        assert_eq!(file.options, OptionsSpec::default());
        let inst = file.build().unwrap();
        assert_eq!(inst.family.len(), 2);
        assert_eq!(inst.omega, Weight::power(-0.5).unwrap());
    }

    #[test]
    fn parse_errors_name_the_field() {
        let bad = SAMPLE.replace("\"beta\": -0.5", "\"beta\": \"x\"");
        let err = InstanceFile::parse(&bad).unwrap_err();
        assert_eq!(err.path, "omega.beta");
        let bad = SAMPLE.replace("\"kind\": \"power\"", "\"kind\": \"gaussian\"");
        assert_eq!(InstanceFile::parse(&bad).unwrap_err().path, "omega.kind");
        let bad = SAMPLE.replace("\"r\": 1,", "");
        assert!(InstanceFile::parse(&bad)
            .unwrap_err()
            .message
            .contains("`r`"));
    }

    #[test]
    fn build_errors_name_the_field() {
        let bad = SAMPLE.replace("\"values\": [1, 2]", "\"values\": [1, 2, 3]");
        let err = InstanceFile::parse(&bad).unwrap().build().unwrap_err();
        assert!(
            matches!(&err, sparselab::Error::Parameter(m) if m.starts_with("sigma:")),
            "{err}"
        );
        let bad = SAMPLE.replace("\"beta\": -0.5", "\"beta\": -1.5");
        let err = InstanceFile::parse(&bad).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("omega:"));
    }
}
