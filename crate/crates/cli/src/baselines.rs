//! Frozen ratio ranges per suite and quantity.
//!
//! Plain text, one `suite quantity min max` entry per line; `#` starts a
//! comment. Observed ranges must stay inside the frozen ones up to a relative
//! tolerance of [`BASELINE_RTOL`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sparselab::suites::{RatioRange, Suite, SuiteOutcome};

use crate::report::{fmt_float, BaselineCheck};

pub const BASELINE_RTOL: f64 = 1e-9;

/// The baselines shipped with the binary.
pub const EMBEDDED: &str = include_str!("../baselines.txt");

/// Default location of the versioned baselines file.
pub fn default_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines.txt")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Baselines {
    pub header: Vec<String>,
    pub entries: BTreeMap<(String, String), (f64, f64)>,
}

impl Baselines {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = Baselines::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if out.entries.is_empty() {
                    out.header.push(comment.trim().to_string());
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [suite, quantity, min, max] = fields[..] else {
                return Err(format!(
                    "baselines line {}: expected `suite quantity min max`",
                    n + 1
                ));
            };
            suite
                .parse::<Suite>()
                .map_err(|e| format!("baselines line {}: {e}", n + 1))?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| format!("baselines line {}: bad number '{s}': {e}", n + 1))
            };
            out.entries.insert(
                (suite.to_string(), quantity.to_string()),
                (num(min)?, num(max)?),
            );
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            writeln!(s, "# {h}").unwrap();
        }
        for ((suite, quantity), (min, max)) in &self.entries {
            writeln!(
                s,
                "{suite} {quantity} {} {}",
                fmt_float(*min),
                fmt_float(*max)
            )
            .unwrap();
        }
        s
    }

    pub fn get(&self, suite: Suite, quantity: &str) -> Option<(f64, f64)> {
        self.entries
            .get(&(suite.name().to_string(), quantity.to_string()))
            .copied()
    }

    /// Checks every observed range of `outcome`; quantities without a
    /// baseline fail.
    pub fn compare(&self, outcome: &SuiteOutcome) -> Vec<BaselineCheck> {
        outcome
            .ranges
            .iter()
            .map(|(quantity, range)| {
                let base = self.get(outcome.suite, quantity);
                BaselineCheck {
                    quantity: quantity.clone(),
                    observed_min: range.min,
                    observed_max: range.max,
                    baseline_min: base.map(|b| b.0),
                    baseline_max: base.map(|b| b.1),
                    passed: base.is_some_and(|b| within(range, b)),
                }
            })
            .collect()
    }

    /// Replaces the entries of `outcome.suite` by its observed ranges.
    pub fn refresh(&mut self, outcome: &SuiteOutcome) {
        let name = outcome.suite.name();
        self.entries.retain(|(suite, _), _| suite != name);
        for (quantity, range) in &outcome.ranges {
            self.entries
                .insert((name.to_string(), quantity.clone()), (range.min, range.max));
        }
    }
}

fn within(range: &RatioRange, (min, max): (f64, f64)) -> bool {
    range.min >= min - BASELINE_RTOL * min.abs() && range.max <= max + BASELINE_RTOL * max.abs()
}
