//! Benchmark scenarios and reference-value reproduction for the ruin
//! solvers.
//!
//! [`catalog`] defines the shared parameterisation behind the four
//! reference tables (claim distributions, premium scale, transition
//! rules); [`fixtures`] embeds the reference values with their comparison
//! tolerances; [`reproduce`] recomputes them and reports cell-level
//! diffs; [`figures`] assembles the plotted series from the same cached
//! computations.

pub mod catalog;
pub mod figures;
pub mod fixtures;
pub mod reproduce;

mod error;

pub use error::{Error, Result};

pub use catalog::{
    benchmark_rules, benchmark_scale, principle_for_table, table_query, Correlation, DelayCase,
    Scenario, HORIZON, INITIAL_LEVEL, SMOKE_U_GRID, U_GRID,
};
pub use figures::{figure_data, write_figure_csv, FigureData, FigureSeries};
pub use fixtures::{
    pinned_deviation, reference_cells, reference_chains, reference_psi, ReferenceCell,
    ReferenceChain, ReferenceDeviation, KNOWN_REFERENCE_DEVIATIONS, MARKOV_TOLERANCE,
    PINNED_TOLERANCE, PREMIUM_TOLERANCE, TABLE_TOLERANCE,
};
pub use reproduce::{
    chain_tables, reproduce_chains, reproduce_table, write_chain_csv, write_table_csv,
    write_table_diff, CellReport, ChainReport, TableReport, Workbench,
};
