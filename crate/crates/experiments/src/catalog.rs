//! The benchmark scenario catalog behind the four reference tables.
//!
//! All tables share one parameterisation: geometric claim pairs with mean
//! 5 in three correlation cases (identical by-claims, an even mixture, and
//! independent by-claims), delay probability 0.2 or 0.8, the premium scale
//! `{11, 12, 14, 16, 18}` entered at the middle level, and a horizon of 20
//! periods.  Tables differ only in the premium principle: amount-based
//! rules move a level on thresholds 3/14, count-based rules on counts 0/1.

use ruinlab_core::bonus_malus::{PremiumScale, Principle, RuleSet};
use ruinlab_core::claims::JointClaimPmf;
use ruinlab_core::ruin_engine::RuinQuery;

use crate::{Error, Result};

/// Periods observed for ruin in every benchmark query.
pub const HORIZON: u32 = 20;

/// Zero-based starting level (the middle of the five-level scale, 140% of
/// the expected aggregate claim).
pub const INITIAL_LEVEL: usize = 2;

/// Initial surplus grid of the reference tables.
pub const U_GRID: [i64; 11] = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

/// Reduced surplus grid for smoke runs.
pub const SMOKE_U_GRID: [i64; 3] = [0, 50, 100];

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Correlation case of the claim pair.  The main claim is geometric with
/// mean 5 in every case; the cases differ in how the by-claim couples to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correlation {
    /// By-claim identical to the main claim (correlation 1).
    High,
    /// Even mixture of the high and low cases (correlation 0.54).
    Moderate,
    /// By-claim independent of a positive main claim (correlation 0.14).
    Low,
}

impl Correlation {
    pub const ALL: [Correlation; 3] =
        [Correlation::High, Correlation::Moderate, Correlation::Low];

    pub fn letter(self) -> char {
        match self {
            Correlation::High => 'H',
            Correlation::Moderate => 'M',
            Correlation::Low => 'L',
        }
    }

    /// The claim-pair distribution of this case.
    pub fn dist(self) -> JointClaimPmf {
        let p = 1.0 / 6.0;
        let r = 1.0 / 7.0;
        match self {
            Correlation::High => JointClaimPmf::geometric_h(p),
            Correlation::Low => JointClaimPmf::geometric_l(p, r),
            Correlation::Moderate => JointClaimPmf::mixture(
                0.5,
                JointClaimPmf::geometric_h(p).expect("valid parameter"),
                JointClaimPmf::geometric_l(p, r).expect("valid parameters"),
            ),
        }
        .expect("catalog distributions are valid")
    }
}

/// How often by-claim settlements are delayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DelayCase {
    /// `q = 0.2`, labelled `1`.
    Rare,
    /// `q = 0.8`, labelled `2`.
    Frequent,
}

impl DelayCase {
    pub const ALL: [DelayCase; 2] = [DelayCase::Rare, DelayCase::Frequent];

    pub fn q(self) -> f64 {
        match self {
            DelayCase::Rare => 0.2,
            DelayCase::Frequent => 0.8,
        }
    }

    pub fn digit(self) -> char {
        match self {
            DelayCase::Rare => '1',
            DelayCase::Frequent => '2',
        }
    }
}

/// One column of a reference table: a correlation case plus a delay case,
/// labelled `H1` .. `L2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub correlation: Correlation,
    pub delay: DelayCase,
}

impl Scenario {
    /// All six scenarios in reference-table column order.
    pub const ALL: [Scenario; 6] = [
        Scenario { correlation: Correlation::High, delay: DelayCase::Rare },
        Scenario { correlation: Correlation::High, delay: DelayCase::Frequent },
        Scenario { correlation: Correlation::Moderate, delay: DelayCase::Rare },
        Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        Scenario { correlation: Correlation::Low, delay: DelayCase::Rare },
        Scenario { correlation: Correlation::Low, delay: DelayCase::Frequent },
    ];

    /// The scenario pair used by smoke runs: the extremes `H1` and `L2`.
    pub const SMOKE: [Scenario; 2] = [
        Scenario { correlation: Correlation::High, delay: DelayCase::Rare },
        Scenario { correlation: Correlation::Low, delay: DelayCase::Frequent },
    ];

    pub fn label(self) -> String {
        format!("{}{}", self.correlation.letter(), self.delay.digit())
    }

    pub fn parse(label: &str) -> Result<Scenario> {
        let mut chars = label.chars();
        let (Some(c), Some(d), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::BadScenario(label.to_string()));
        };
        let correlation = match c {
            'H' | 'h' => Correlation::High,
            'M' | 'm' => Correlation::Moderate,
            'L' | 'l' => Correlation::Low,
            _ => return Err(Error::BadScenario(label.to_string())),
        };
        let delay = match d {
            '1' => DelayCase::Rare,
            '2' => DelayCase::Frequent,
            _ => return Err(Error::BadScenario(label.to_string())),
        };
        Ok(Scenario { correlation, delay })
    }

    pub fn q(self) -> f64 {
        self.delay.q()
    }

    pub fn dist(self) -> JointClaimPmf {
        self.correlation.dist()
    }
}

// ---------------------------------------------------------------------------
// Scale, rules, and queries
// ---------------------------------------------------------------------------

/// The five-level premium scale shared by every benchmark.
pub fn benchmark_scale() -> PremiumScale {
    PremiumScale::new(&[11, 12, 14, 16, 18]).expect("strictly increasing")
}

/// The transition rule a principle uses in the benchmarks: amounts move a
/// level down at total 3 and up above 14; counts move down at 0 claims and
/// up above 1.
pub fn benchmark_rules(principle: Principle) -> RuleSet {
    let bounds = if principle.is_count() { (0, 1) } else { (3, 14) };
    RuleSet::threshold(benchmark_scale().len(), bounds.0, bounds.1)
        .expect("valid thresholds")
}

/// The premium principle computed by each reference table.
pub fn principle_for_table(table: u8) -> Result<Principle> {
    match table {
        1 => Ok(Principle::AggregateReported),
        2 => Ok(Principle::AggregateSettled),
        3 => Ok(Principle::ReportedCount),
        4 => Ok(Principle::SettledCount),
        other => Err(Error::BadTable(other)),
    }
}

/// The solver query behind one cell of a reference table.
pub fn table_query(table: u8, scenario: Scenario, u0: i64) -> Result<RuinQuery> {
    let principle = principle_for_table(table)?;
    Ok(RuinQuery {
        principle,
        dist: scenario.dist(),
        q: scenario.q(),
        scale: benchmark_scale(),
        rules: benchmark_rules(principle),
        u0,
        initial_level: INITIAL_LEVEL,
        horizon: HORIZON,
        emit_grid: false,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distributions_have_the_documented_moments() {
        for corr in Correlation::ALL {
            let stats = corr.dist().statistics();
            assert_abs_diff_eq!(stats.mean_x, 5.0, epsilon = 1e-9);
            assert_abs_diff_eq!(stats.mean_y, 5.0, epsilon = 1e-9);
        }
        let corr_of = |c: Correlation| c.dist().statistics().corr_xy.unwrap();
        assert_abs_diff_eq!(corr_of(Correlation::High), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(corr_of(Correlation::Moderate), 0.5401, epsilon = 5e-5);
        assert_abs_diff_eq!(corr_of(Correlation::Low), 0.1443, epsilon = 5e-5);

        let count_corr = |c: Correlation| c.dist().statistics().corr_counts.unwrap();
        assert_abs_diff_eq!(count_corr(Correlation::High), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(count_corr(Correlation::Moderate), 0.8272, epsilon = 5e-5);
        // With these claim frequencies the low-case count correlation is
        // exactly sqrt(p_y (1 - p_x) / (p_x (1 - p_y))) = sqrt(1/2).
        assert_abs_diff_eq!(
            count_corr(Correlation::Low),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 5e-5
        );
    }

    #[test]
    fn scenario_labels_round_trip() {
        for scenario in Scenario::ALL {
            assert_eq!(Scenario::parse(&scenario.label()).unwrap(), scenario);
        }
        assert!(Scenario::parse("X1").is_err());
        assert!(Scenario::parse("H3").is_err());
        assert!(Scenario::parse("H12").is_err());
    }

    #[test]
    fn rules_saturate_where_expected() {
        assert_eq!(benchmark_rules(Principle::AggregateReported).saturation_start(), 15);
        assert_eq!(benchmark_rules(Principle::SettledCount).saturation_start(), 2);
        assert_eq!(benchmark_scale().premium(INITIAL_LEVEL), 14);
    }

    #[test]
    fn tables_map_to_principles() {
        assert!(principle_for_table(0).is_err());
        assert!(principle_for_table(5).is_err());
        assert_eq!(principle_for_table(2).unwrap(), Principle::AggregateSettled);
        let query = table_query(4, Scenario::ALL[5], 30).unwrap();
        assert_eq!(query.q, 0.8);
        assert_eq!(query.horizon, HORIZON);
    }
}
