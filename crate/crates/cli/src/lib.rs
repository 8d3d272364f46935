//! `ruinlab` — command-line front end for the ruin-probability solver.
//!
//! Five subcommands cover the workflows of the workspace:
//!
//! * `ruin` — exact finite-horizon ruin probability for a JSON query;
//! * `simulate` — seeded Monte Carlo estimate of the same probability;
//! * `markov` — premium-level transition matrix, stationary law, and
//!   long-run expected premium;
//! * `reproduce` — recompute the bundled benchmark tables, chains, and
//!   figure data, diffing them against the stored references;
//! * `sweep` — a ruin-probability grid over surplus, delay probability,
//!   and premium principle.
//!
//! The library exposes [`run`] so integration tests can drive the full
//! argument-to-exit-code path in process; the binary is a one-line
//! wrapper around it.

mod args;
mod error;
mod exec;

pub use args::{Cli, Command};
pub use error::{Error, Result};
pub use exec::{fmt_sig, run};
