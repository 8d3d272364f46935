//! JSON-friendly configuration schemas and their conversion into solver
//! queries.
//!
//! The schemas deliberately mirror the model vocabulary: a query names a
//! premium principle, a claim distribution, the delay probability, the
//! premium scale with its transition rules, and the initial state.  Levels
//! are one-based here (as in human-facing tables); conversion produces the
//! zero-based indices used internally.

use serde::{Deserialize, Serialize};

use crate::bonus_malus::{PremiumScale, Principle, RuleBand, RuleSet};
use crate::claims::{JointClaimPmf, DEFAULT_TRUNCATION_EPSILON};
use crate::ruin_engine::RuinQuery;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Distribution schema
// ---------------------------------------------------------------------------

/// A claim-pair distribution, keyed by `family`.
///
/// ```json
/// {"family": "geometric_h", "p": 0.1667}
/// {"family": "geometric_l", "p": 0.1667, "r": 0.1429}
/// {"family": "mixture", "weight": 0.5, "left": {...}, "right": {...}}
/// {"family": "table", "table": [[0, 0, 0.5], [2, 1, 0.5]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionConfig {
    /// By-claim equal to the main claim (perfectly dependent pair).
    GeometricH {
        p: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        truncation_epsilon: Option<f64>,
    },
    /// Independent geometric main and by-claims.
    GeometricL {
        p: f64,
        r: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        truncation_epsilon: Option<f64>,
    },
    /// Convex combination `weight * left + (1 - weight) * right`.
    Mixture {
        weight: f64,
        left: Box<DistributionConfig>,
        right: Box<DistributionConfig>,
        #[serde(skip_serializing_if = "Option::is_none")]
        truncation_epsilon: Option<f64>,
    },
    /// Explicit finite support, rows of `(x, y, probability)`.
    Table {
        table: Vec<(i64, i64, f64)>,
        #[serde(skip_serializing_if = "Option::is_none")]
        truncation_epsilon: Option<f64>,
    },
}

impl DistributionConfig {
    /// Builds the distribution, applying any per-config truncation budget.
    pub fn build(&self) -> Result<JointClaimPmf> {
        match self {
            DistributionConfig::GeometricH {
                p,
                truncation_epsilon,
            } => finish(JointClaimPmf::geometric_h(*p)?, *truncation_epsilon),
            DistributionConfig::GeometricL {
                p,
                r,
                truncation_epsilon,
            } => finish(JointClaimPmf::geometric_l(*p, *r)?, *truncation_epsilon),
            DistributionConfig::Mixture {
                weight,
                left,
                right,
                truncation_epsilon,
            } => finish(
                JointClaimPmf::mixture(*weight, left.build()?, right.build()?)?,
                *truncation_epsilon,
            ),
            DistributionConfig::Table {
                table,
                truncation_epsilon,
            } => JointClaimPmf::from_table(
                table,
                truncation_epsilon.unwrap_or(DEFAULT_TRUNCATION_EPSILON),
            ),
        }
    }
}

fn finish(dist: JointClaimPmf, eps: Option<f64>) -> Result<JointClaimPmf> {
    match eps {
        Some(eps) => dist.with_truncation_epsilon(eps),
        None => Ok(dist),
    }
}

// ---------------------------------------------------------------------------
// Rule schema
// ---------------------------------------------------------------------------

/// Premium transition rules, keyed by `kind`.
///
/// ```json
/// {"kind": "threshold", "down_max": 3, "stay_max": 14}
/// {"kind": "table", "entries": [[1, 0, 0, 1], [1, 1, null, 2]]}
/// ```
///
/// Table entries are `(level, trigger_min, trigger_max, destination)` with
/// one-based levels; a `null` upper bound means "and above".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RulesConfig {
    Threshold { down_max: u64, stay_max: u64 },
    Table {
        entries: Vec<(usize, u64, Option<u64>, usize)>,
    },
}

impl RulesConfig {
    /// Builds a total rule set for a scale of `level_count` levels.
    pub fn build(&self, level_count: usize) -> Result<RuleSet> {
        match self {
            RulesConfig::Threshold { down_max, stay_max } => {
                RuleSet::threshold(level_count, *down_max, *stay_max)
            }
            RulesConfig::Table { entries } => {
                let mut bands: Vec<Vec<RuleBand>> = vec![Vec::new(); level_count];
                for &(level, lo, hi, dest) in entries {
                    if level == 0 || level > level_count {
                        return Err(Error::Config(format!(
                            "rule entry names level {level}, but levels are one-based up to {level_count}"
                        )));
                    }
                    if dest == 0 {
                        return Err(Error::Config(
                            "rule destinations are one-based; 0 is not a level".into(),
                        ));
                    }
                    bands[level - 1].push(RuleBand {
                        lo,
                        hi,
                        dest: dest - 1,
                    });
                }
                for level_bands in &mut bands {
                    level_bands.sort_by_key(|b| b.lo);
                }
                RuleSet::from_bands(level_count, bands)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Query schema
// ---------------------------------------------------------------------------

/// A complete ruin-probability query as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub principle: Principle,
    pub distribution: DistributionConfig,
    /// Probability that a by-claim's settlement is delayed one period.
    pub q: f64,
    /// Strictly increasing integer premiums, lowest level first.
    pub scale: Vec<u32>,
    pub rules: RulesConfig,
    /// Initial surplus.
    pub u0: i64,
    /// One-based starting position in the scale.
    pub initial_level: usize,
    /// Number of periods observed for ruin.
    pub horizon: u32,
}

impl QueryConfig {
    pub fn from_json_str(text: &str) -> Result<QueryConfig> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("could not parse query config: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("query config serializes")
    }

    /// Converts into a solver query, validating every part.
    pub fn build(&self) -> Result<RuinQuery> {
        let dist = self.distribution.build()?;
        let scale = PremiumScale::new(&self.scale)?;
        let rules = self.rules.build(scale.len())?;
        if self.initial_level == 0 || self.initial_level > scale.len() {
            return Err(Error::Config(format!(
                "initial_level is one-based and must lie in 1..={}, got {}",
                scale.len(),
                self.initial_level
            )));
        }
        let query = RuinQuery {
            principle: self.principle,
            dist,
            q: self.q,
            scale,
            rules,
            u0: self.u0,
            initial_level: self.initial_level - 1,
            horizon: self.horizon,
            emit_grid: false,
        };
        query.validate()?;
        Ok(query)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "principle": "aggregate_reported",
        "distribution": {"family": "geometric_h", "p": 0.16666666666666666},
        "q": 0.2,
        "scale": [11, 12, 14, 16, 18],
        "rules": {"kind": "threshold", "down_max": 3, "stay_max": 14},
        "u0": 20,
        "initial_level": 3,
        "horizon": 5
    }"#;

    #[test]
    fn sample_config_builds_a_query() {
        let cfg = QueryConfig::from_json_str(SAMPLE).unwrap();
        let query = cfg.build().unwrap();
        assert_eq!(query.principle, Principle::AggregateReported);
        assert_eq!(query.initial_level, 2); // one-based 3
        assert_eq!(query.scale.as_slice(), &[11, 12, 14, 16, 18]);
        assert_eq!(query.horizon, 5);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = QueryConfig::from_json_str(SAMPLE).unwrap();
        let again = QueryConfig::from_json_str(&cfg.to_json_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = SAMPLE.replace("\"q\"", "\"qq\"");
        let err = QueryConfig::from_json_str(&bad).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("qq")));
    }

    #[test]
    fn one_based_levels_are_enforced() {
        let cfg = QueryConfig::from_json_str(SAMPLE).unwrap();
        let mut zero = cfg.clone();
        zero.initial_level = 0;
        assert!(matches!(zero.build(), Err(Error::Config(_))));
        let mut high = cfg;
        high.initial_level = 6;
        assert!(matches!(high.build(), Err(Error::Config(_))));
    }

    #[test]
    fn mixture_and_table_families_build() {
        let text = r#"{
            "family": "mixture",
            "weight": 0.5,
            "left": {"family": "geometric_h", "p": 0.16666666666666666},
            "right": {"family": "geometric_l", "p": 0.16666666666666666, "r": 0.14285714285714285}
        }"#;
        let cfg: DistributionConfig = serde_json::from_str(text).unwrap();
        let dist = cfg.build().unwrap();
        // Both components put mass 1/6 on (0, 0): a zero main claim forces
        // a zero by-claim.
        assert!((dist.pmf(0, 0).unwrap() - 1.0 / 6.0).abs() < 1e-12);

        let table = r#"{"family": "table", "table": [[0, 0, 0.5], [2, 1, 0.5]]}"#;
        let cfg: DistributionConfig = serde_json::from_str(table).unwrap();
        let dist = cfg.build().unwrap();
        assert_eq!(dist.pmf(2, 1).unwrap(), 0.5);
        assert_eq!(dist.residual_mass(), 0.0);
    }

    #[test]
    fn invalid_distribution_surfaces_as_distribution_error() {
        let dup = r#"{"family": "table", "table": [[1, 0, 0.5], [1, 0, 0.5]]}"#;
        let cfg: DistributionConfig = serde_json::from_str(dup).unwrap();
        assert!(matches!(cfg.build(), Err(Error::Distribution(_))));
    }

    #[test]
    fn tabular_rules_match_their_threshold_equivalent() {
        let tabular = RulesConfig::Table {
            entries: vec![
                (1, 0, Some(3), 1),
                (1, 4, Some(14), 1),
                (1, 15, None, 2),
                (2, 0, Some(3), 1),
                (2, 4, Some(14), 2),
                (2, 15, None, 3),
                (3, 0, Some(3), 2),
                (3, 4, Some(14), 3),
                (3, 15, None, 3),
            ],
        };
        let built = tabular.build(3).unwrap();
        let threshold = RuleSet::threshold(3, 3, 14).unwrap();
        for level in 0..3 {
            for trigger in [0u64, 3, 4, 14, 15, 40] {
                assert_eq!(built.dest(level, trigger), threshold.dest(level, trigger));
            }
        }
    }

    #[test]
    fn out_of_range_rule_levels_are_rejected() {
        let cfg = RulesConfig::Table {
            entries: vec![(4, 0, None, 1)],
        };
        assert!(matches!(cfg.build(3), Err(Error::Config(_))));
    }
}
