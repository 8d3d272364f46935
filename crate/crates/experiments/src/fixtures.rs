//! Embedded reference values the reproduction harness compares against,
//! with their comparison tolerances.
//!
//! The reference tables carry five decimal places, so a correct solver can
//! differ by up to half a unit in the last place plus accumulated
//! round-off; the comparison tolerances are set accordingly.

use csv::ReaderBuilder;

use crate::catalog::{Correlation, DelayCase, Scenario};
use crate::{Error, Result};

const TABLES_CSV: &str = include_str!("../fixtures/reference_tables.csv");
const MARKOV_CSV: &str = include_str!("../fixtures/reference_markov.csv");
const STATIONARY_CSV: &str = include_str!("../fixtures/reference_stationary.csv");

/// Absolute tolerance for ruin-probability cells (reference rounded to 5
/// decimals).
pub const TABLE_TOLERANCE: f64 = 2e-5;

/// Absolute tolerance for transition-matrix and stationary entries.
pub const MARKOV_TOLERANCE: f64 = 1e-5;

/// Absolute tolerance for long-term expected premiums (reference rounded
/// to 2 decimals).
pub const PREMIUM_TOLERANCE: f64 = 0.01;

/// Absolute tolerance against the `recomputed` value of a
/// [`ReferenceDeviation`].
pub const PINNED_TOLERANCE: f64 = 1e-9;

/// A table cell whose stored reference digits are known to sit more than
/// [`TABLE_TOLERANCE`] away from the correct model value, together with
/// that correct value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceDeviation {
    pub table: u8,
    pub scenario: Scenario,
    pub u: i64,
    /// The adjudicated correct value (see
    /// [`KNOWN_REFERENCE_DEVIATIONS`]), accurate to well under
    /// [`PINNED_TOLERANCE`].
    pub recomputed: f64,
}

/// The reference cells that fail [`TABLE_TOLERANCE`] against a correct
/// solver — 21 in table 2 and 3 in table 3 — pinned to their adjudicated
/// values.
///
/// Adjudication ran two independent routes.  First, the solver's
/// closed-form geometric tail handling was swapped for exhaustive finite
/// claim tables truncated at residual mass ~5e-14; reassigning that
/// residual moves a 20-period ruin probability by at most ~2e-12, so the
/// tabled run brackets the true value to that width — and both routes
/// agree on these cells to better than 1e-13.  Second, 4e7-path Monte
/// Carlo at the worst cells lands within |z| < 1.8 of the recomputed
/// values while rejecting the stored digits at z as far out as -9.7.
/// The stored digits are therefore the outliers.  Their offsets (2.2e-5
/// to 6.1e-4) are always positive, decay with surplus, grow with the
/// delay probability, and are worst where the pending-settlement state
/// is largest — table 2 worst, table 3 mild, tables 1 and 4 clean —
/// consistent with infinite by-claim sums truncated too early in
/// whatever produced the stored values.
///
/// Tests hold both sides in place: every other cell must match its
/// stored reference within [`TABLE_TOLERANCE`], and these cells must
/// match `recomputed` within [`PINNED_TOLERANCE`].  Any 25th deviation,
/// or drift on these 24, is a failure.
pub const KNOWN_REFERENCE_DEVIATIONS: [ReferenceDeviation; 24] = [
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Rare },
        u: 0,
        recomputed: 0.4972495087,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Rare },
        u: 10,
        recomputed: 0.2918740916,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Rare },
        u: 20,
        recomputed: 0.1682211308,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Rare },
        u: 30,
        recomputed: 0.0955285169,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Frequent },
        u: 0,
        recomputed: 0.3669922666,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Frequent },
        u: 10,
        recomputed: 0.2035930008,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Frequent },
        u: 20,
        recomputed: 0.1125943702,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Frequent },
        u: 30,
        recomputed: 0.0616961799,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::High, delay: DelayCase::Frequent },
        u: 40,
        recomputed: 0.0335422232,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Rare },
        u: 0,
        recomputed: 0.4772854427,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Rare },
        u: 10,
        recomputed: 0.2463038090,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Rare },
        u: 20,
        recomputed: 0.1249247619,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        u: 0,
        recomputed: 0.3621986875,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        u: 10,
        recomputed: 0.1784153326,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        u: 20,
        recomputed: 0.0880127922,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        u: 30,
        recomputed: 0.0434229029,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Low, delay: DelayCase::Rare },
        u: 0,
        recomputed: 0.4510747067,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Low, delay: DelayCase::Rare },
        u: 10,
        recomputed: 0.1927280193,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Low, delay: DelayCase::Frequent },
        u: 0,
        recomputed: 0.3536617043,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Low, delay: DelayCase::Frequent },
        u: 10,
        recomputed: 0.1475282553,
    },
    ReferenceDeviation {
        table: 2,
        scenario: Scenario { correlation: Correlation::Low, delay: DelayCase::Frequent },
        u: 20,
        recomputed: 0.0590567417,
    },
    ReferenceDeviation {
        table: 3,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        u: 0,
        recomputed: 0.2355451550,
    },
    ReferenceDeviation {
        table: 3,
        scenario: Scenario { correlation: Correlation::Moderate, delay: DelayCase::Frequent },
        u: 10,
        recomputed: 0.1072062059,
    },
    ReferenceDeviation {
        table: 3,
        scenario: Scenario { correlation: Correlation::Low, delay: DelayCase::Frequent },
        u: 0,
        recomputed: 0.2288775041,
    },
];

/// The pinned deviation entry for a cell, if it has one.
pub fn pinned_deviation(table: u8, scenario: Scenario, u: i64) -> Option<ReferenceDeviation> {
    KNOWN_REFERENCE_DEVIATIONS
        .iter()
        .copied()
        .find(|d| d.table == table && d.scenario == scenario && d.u == u)
}

/// One reference ruin probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCell {
    pub table: u8,
    pub scenario: Scenario,
    pub u: i64,
    pub psi: f64,
}

/// Reference level-chain analysis for one time-homogeneous benchmark
/// (tables 1 and 3) and correlation case: the one-step transition matrix,
/// its stationary distribution, and the long-term expected premium.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceChain {
    pub table: u8,
    pub correlation: Correlation,
    pub matrix: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub premium: f64,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize) -> Result<T> {
    record
        .get(idx)
        .ok_or_else(|| Error::Fixture(format!("missing column {idx} in {record:?}")))?
        .trim()
        .parse()
        .map_err(|_| Error::Fixture(format!("unparsable column {idx} in {record:?}")))
}

fn correlation_from_letter(s: &str) -> Result<Correlation> {
    match s {
        "H" => Ok(Correlation::High),
        "M" => Ok(Correlation::Moderate),
        "L" => Ok(Correlation::Low),
        other => Err(Error::Fixture(format!("unknown correlation case {other:?}"))),
    }
}

/// All 264 reference ruin probabilities, in file order (tables 1-4, table
/// column order, increasing surplus).
pub fn reference_cells() -> Result<Vec<ReferenceCell>> {
    let mut cells = Vec::with_capacity(264);
    for record in reader(TABLES_CSV).records() {
        let record = record?;
        cells.push(ReferenceCell {
            table: parse_field(&record, 0)?,
            scenario: Scenario::parse(record.get(1).unwrap_or_default())?,
            u: parse_field(&record, 2)?,
            psi: parse_field(&record, 3)?,
        });
    }
    Ok(cells)
}

/// The reference value for one table cell.
pub fn reference_psi(table: u8, scenario: Scenario, u: i64) -> Result<f64> {
    reference_cells()?
        .iter()
        .find(|c| c.table == table && c.scenario == scenario && c.u == u)
        .map(|c| c.psi)
        .ok_or_else(|| {
            Error::Fixture(format!(
                "no reference value for table {table}, scenario {}, u = {u}",
                scenario.label()
            ))
        })
}

/// The six reference chain analyses (tables 1 and 3, cases H/M/L).
pub fn reference_chains() -> Result<Vec<ReferenceChain>> {
    let mut chains: Vec<ReferenceChain> = Vec::with_capacity(6);
    for record in reader(MARKOV_CSV).records() {
        let record = record?;
        let table: u8 = parse_field(&record, 0)?;
        let correlation = correlation_from_letter(record.get(1).unwrap_or_default())?;
        let row_no: usize = parse_field(&record, 2)?;
        let row: Vec<f64> = (3..8)
            .map(|i| parse_field(&record, i))
            .collect::<Result<_>>()?;
        let chain = match chains
            .iter_mut()
            .find(|c| c.table == table && c.correlation == correlation)
        {
            Some(chain) => chain,
            None => {
                chains.push(ReferenceChain {
                    table,
                    correlation,
                    matrix: Vec::new(),
                    stationary: Vec::new(),
                    premium: 0.0,
                });
                chains.last_mut().unwrap()
            }
        };
        if row_no != chain.matrix.len() + 1 {
            return Err(Error::Fixture(format!(
                "matrix rows out of order at table {table} case {correlation:?}"
            )));
        }
        chain.matrix.push(row);
    }
    for record in reader(STATIONARY_CSV).records() {
        let record = record?;
        let table: u8 = parse_field(&record, 0)?;
        let correlation = correlation_from_letter(record.get(1).unwrap_or_default())?;
        let chain = chains
            .iter_mut()
            .find(|c| c.table == table && c.correlation == correlation)
            .ok_or_else(|| {
                Error::Fixture(format!(
                    "stationary row without a matrix: table {table} case {correlation:?}"
                ))
            })?;
        chain.stationary = (2..7)
            .map(|i| parse_field(&record, i))
            .collect::<Result<_>>()?;
        chain.premium = parse_field(&record, 7)?;
    }
    for chain in &chains {
        if chain.matrix.len() != 5 || chain.stationary.len() != 5 {
            return Err(Error::Fixture(format!(
                "incomplete chain reference: table {} case {:?}",
                chain.table, chain.correlation
            )));
        }
    }
    Ok(chains)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
