//! Finite-horizon ruin probabilities for a discrete-time risk model in which
//! every main claim may induce a by-claim whose settlement can be delayed by
//! one period, and premiums follow a bonus-malus scale.
//!
//! The surplus process is
//!
//! ```text
//! U_k = U_0 + sum_{t=1..k} (C_t - S_t),
//! ```
//!
//! where `C_t` is the premium collected at the start of period `t` (chosen
//! from a finite scale by a transition rule applied to the previous period's
//! claim experience) and `S_t` is the amount settled in period `t`: the main
//! claim `X_t`, plus the by-claim `Y_t` unless its settlement is delayed
//! (probability `q`, decided independently per period), plus any by-claim
//! delayed from period `t - 1`.  Ruin is the event `U_k < 0` for some
//! `k <= n`.
//!
//! Four premium rules are supported, distinguished by what the transition
//! rule reacts to: the aggregate reported amount `X + Y`, the aggregate
//! settled amount `S_t`, the number of reported claims, or the number of
//! settled claims.
//!
//! The crate is organised around:
//!
//! * [`claims`] — joint claim-size distributions and the summation kernels
//!   the recursions are built from,
//! * [`bonus_malus`] — premium scales, transition rules, and the stationary
//!   analysis of the induced level chain,
//! * [`ruin_engine`] — exact finite-horizon ruin probabilities by backward
//!   recursion, one solver per premium rule,
//! * [`mc_oracle`] — an independent Monte Carlo simulator and an exhaustive
//!   path enumerator used to cross-check the solvers,
//! * [`config`] — serde-backed configuration schemas for distributions,
//!   rules, and queries.
//!
//! All solvers are deterministic: results do not depend on thread count or
//! scheduling, and the simulator is reproducible from its seed alone.

pub mod bonus_malus;
pub mod claims;
pub mod config;
mod error;
pub mod mc_oracle;
pub mod ruin_engine;

pub use error::{Error, Result};

pub use bonus_malus::{
    expected_premium, stationary_distribution, transition_matrix, PremiumScale, Principle, RuleSet,
};
pub use claims::{ClaimStatistics, JointClaimPmf};
pub use config::{DistributionConfig, QueryConfig, RulesConfig};
pub use mc_oracle::{exact_enumerate, exact_enumerate_from, simulate, McEstimate};
pub use ruin_engine::{ruin_probability, PsiGrid, RuinQuery, RuinResult};
