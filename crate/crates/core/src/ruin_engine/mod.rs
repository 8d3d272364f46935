//! Exact finite-horizon ruin probabilities by backward recursion.
//!
//! For every premium principle the solver iterates over the horizon one
//! period at a time.  A layer holds, for each premium level, the ruin
//! probabilities `psi_i(u, n)` over the surplus range still reachable from
//! the queried state, together with the auxiliary probabilities
//! `psi'_i(u; z, n)` of the process that starts with an up-front delayed
//! by-claim `z`.  One period's layer is computed from the previous one by
//! conditioning on the period's claims and the delay coin:
//!
//! * claims settled within the period move the surplus and the premium
//!   level and continue in `psi`;
//! * a delayed by-claim that the next period can still absorb continues in
//!   `psi'` (under reported principles this collapses onto `psi` at reduced
//!   surplus — the premium trigger never sees the delay);
//! * claim totals beyond the available funds contribute their mass to ruin
//!   directly, and the infinite tails involved are folded into closed-form
//!   complements, so results carry no truncation error.
//!
//! The shape of the auxiliary state differs by principle: under reported
//! triggers only the shortfall `z - u` at zero surplus matters; under the
//! settled-aggregate principle the pair `(u - z, z)` is tracked with the
//! `z` axis deduplicated beyond the point where the transition rule
//! saturates; under the settled-count principle only `u - z` matters.

mod reported;
mod settled;
mod tables;

use std::time::{Duration, Instant};

use crate::bonus_malus::{PremiumScale, Principle, RuleSet};
use crate::claims::JointClaimPmf;
use crate::{Error, Result};
use tables::DistTables;

// ---------------------------------------------------------------------------
// Query and result types
// ---------------------------------------------------------------------------

/// A fully specified ruin-probability computation.
#[derive(Debug, Clone)]
pub struct RuinQuery {
    pub principle: Principle,
    pub dist: JointClaimPmf,
    /// Probability that a by-claim's settlement is delayed one period.
    pub q: f64,
    pub scale: PremiumScale,
    pub rules: RuleSet,
    /// Initial surplus.  Negative values are legal and yield probability
    /// one by convention.
    pub u0: i64,
    /// Zero-based initial premium level.
    pub initial_level: usize,
    /// Number of periods observed for ruin.
    pub horizon: u32,
    /// Also record every layer's `psi` values over `u = 0..=u0`.
    pub emit_grid: bool,
}

impl RuinQuery {
    /// Checks internal consistency; solvers call this before computing.
    pub fn validate(&self) -> Result<()> {
        if !self.q.is_finite() || !(0.0..=1.0).contains(&self.q) {
            return Err(Error::Query(format!(
                "delay probability q must lie in [0, 1], got {}",
                self.q
            )));
        }
        if self.scale.len() != self.rules.level_count() {
            return Err(Error::Query(format!(
                "scale has {} levels but the rule set covers {}",
                self.scale.len(),
                self.rules.level_count()
            )));
        }
        if self.initial_level >= self.scale.len() {
            return Err(Error::Query(format!(
                "initial level {} is outside the scale of {} levels",
                self.initial_level,
                self.scale.len()
            )));
        }
        Ok(())
    }

    /// Surplus capped below at zero: the range the recursion actually runs
    /// over (negative initial surplus short-circuits to probability one).
    fn u_target(&self) -> usize {
        self.u0.max(0) as usize
    }
}

/// One layer of the recursion: all ruin probabilities at a fixed remaining
/// horizon.  The final layer is kept on the result so callers can read the
/// whole surplus profile and the auxiliary probabilities without re-solving.
#[derive(Debug, Clone)]
pub struct DpLayer {
    /// Remaining horizon this layer represents.
    pub(crate) n: u32,
    /// `psi` is stored for `u = 0..=u_max`.
    pub(crate) u_max: usize,
    /// `psi[level][u]`.
    pub(crate) psi: Vec<Vec<f64>>,
    pub(crate) aux: Aux,
    /// Premiums by level, for the reduction bounds.
    pub(crate) premiums: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) enum Aux {
    /// Reported principles: `psi0[level][z - 1]` holds `psi'(0; z)` for
    /// `z = 1..=c_level`; larger shortfalls are certainly ruinous.
    Reported { psi0: Vec<Vec<f64>> },
    /// Settled-aggregate principle: `grid[level][slot - 1][w + offset]`
    /// holds `psi'(u; z)` keyed by `w = u - z` and `slot = min(z, zslots)`;
    /// all `z >= zslots` share one slot because the transition rule is
    /// constant beyond its saturation point.
    SettledAggregate {
        zslots: usize,
        offset: usize,
        w_max: i64,
        grid: Vec<Vec<Vec<f64>>>,
    },
    /// Settled-count principle: `psi'(u; z)` depends on `(u, z)` only
    /// through `w = u - z`; `grid[level][w + offset]`.
    SettledCount {
        offset: usize,
        w_max: i64,
        grid: Vec<Vec<f64>>,
    },
}

impl DpLayer {
    /// `psi_level(u)` at this layer's horizon; `u < 0` gives one.
    pub fn psi(&self, level: usize, u: i64) -> Result<f64> {
        if level >= self.psi.len() {
            return Err(Error::Domain(format!("level {level} out of range")));
        }
        if u < 0 {
            return Ok(1.0);
        }
        let u = u as usize;
        if u > self.u_max {
            return Err(Error::Domain(format!(
                "surplus {u} is outside the stored range 0..={}",
                self.u_max
            )));
        }
        Ok(self.psi[level][u])
    }

    /// `psi'_level(u; z)` at this layer's horizon.  Settling a zero
    /// by-claim changes nothing, so `z = 0` is the plain probability.
    pub fn psi_prime(&self, level: usize, u: i64, z: i64) -> Result<f64> {
        if level >= self.psi.len() {
            return Err(Error::Domain(format!("level {level} out of range")));
        }
        if z < 0 {
            return Err(Error::Domain(format!(
                "up-front delayed by-claim must be non-negative, got {z}"
            )));
        }
        if z == 0 {
            return self.psi(level, u);
        }
        if u < 0 {
            return Ok(1.0);
        }
        let c_i = self.premiums[level] as i64;
        match &self.aux {
            Aux::Reported { psi0 } => {
                if z <= u {
                    self.psi(level, u - z)
                } else if z <= u + c_i {
                    Ok(psi0[level][(z - u - 1) as usize])
                } else {
                    Ok(1.0)
                }
            }
            Aux::SettledAggregate {
                zslots,
                offset,
                w_max,
                grid,
            } => {
                let w = u - z;
                if w < -c_i {
                    return Ok(1.0);
                }
                if w > *w_max {
                    return Err(Error::Domain(format!(
                        "surplus-minus-pending {w} is outside the stored range"
                    )));
                }
                let slot = (z as usize).min(*zslots);
                Ok(grid[level][slot - 1][(w + *offset as i64) as usize])
            }
            Aux::SettledCount {
                offset,
                w_max,
                grid,
            } => {
                let w = u - z;
                if w < -c_i {
                    return Ok(1.0);
                }
                if w > *w_max {
                    return Err(Error::Domain(format!(
                        "surplus-minus-pending {w} is outside the stored range"
                    )));
                }
                Ok(grid[level][(w + *offset as i64) as usize])
            }
        }
    }

    /// Remaining horizon of this layer.
    pub fn horizon(&self) -> u32 {
        self.n
    }

    /// Largest surplus stored in this layer.
    pub fn u_max(&self) -> usize {
        self.u_max
    }
}

/// Full ruin-probability surface indexed `[n - 1][level][u]`:
/// `psi_level(u, n)` for `u = 0..=max(u0, 0)` and `n = 1..=horizon`.
pub type PsiGrid = Vec<Vec<Vec<f64>>>;

/// Result of a ruin-probability computation.
#[derive(Debug, Clone)]
pub struct RuinResult {
    /// `psi_{initial_level}(u0, horizon)`.
    pub value: f64,
    /// Accumulated probability mass dropped by tail truncation.  The
    /// solvers collapse every infinite tail through rule saturation and
    /// complement identities, so this is zero; it is reported so callers
    /// can rely on that invariant programmatically.
    pub truncation_bound: f64,
    pub elapsed: Duration,
    /// When requested, the full surface over smaller surpluses and horizons.
    pub grid: Option<PsiGrid>,
    /// The layer at the full horizon, for surplus profiles and auxiliary
    /// probabilities.
    final_layer: DpLayer,
}

impl RuinResult {
    /// `psi_level(u, horizon)` from the final layer.
    pub fn psi_at(&self, level: usize, u: i64) -> Result<f64> {
        self.final_layer.psi(level, u)
    }

    /// `psi'_level(u; z, horizon)` from the final layer.
    pub fn psi_prime_at(&self, level: usize, u: i64, z: i64) -> Result<f64> {
        self.final_layer.psi_prime(level, u, z)
    }

    pub fn final_layer(&self) -> &DpLayer {
        &self.final_layer
    }
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// One-period ruin probability `psi_level(u, 1)`:
/// `P(X > u + c) + (1 - q) * sum_{y>=1} xi_y(u + c)`.
///
/// Evaluated directly from the distribution's closed-form kernels; the
/// recursion builds on this as its base layer.
pub fn base_case_psi(
    dist: &JointClaimPmf,
    q: f64,
    scale: &PremiumScale,
    level: usize,
    u: i64,
) -> Result<f64> {
    if !q.is_finite() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Query(format!(
            "delay probability q must lie in [0, 1], got {q}"
        )));
    }
    if level >= scale.len() {
        return Err(Error::Domain(format!(
            "level {level} is outside the scale of {} levels",
            scale.len()
        )));
    }
    if u < 0 {
        return Ok(1.0);
    }
    let h = u + scale.premium(level) as i64;
    Ok((dist.tail_x(h) + (1.0 - q) * dist.xi_tail_sum(h)?).clamp(0.0, 1.0))
}

/// Reduces an auxiliary-process probability `psi'_level(u; z)` to stored
/// values using the reported-trigger relationship: the premium never sees
/// the pending by-claim, so only `u - z` matters.
///
/// Returns an internal logic error for layers produced under settled
/// principles, where the reduction does not hold.
pub fn shortfall_reduce(layer: &DpLayer, level: usize, u: i64, z: i64) -> Result<f64> {
    match layer.aux {
        Aux::Reported { .. } => layer.psi_prime(level, u, z),
        _ => Err(Error::Internal(
            "shortfall reduction applies only to reported premium principles; settled triggers \
             react to the pending by-claim itself"
                .into(),
        )),
    }
}

/// Computes the ruin probability for any premium principle.
///
/// Dispatches to the specialised solver for `query.principle`; the result
/// is identical to calling that solver directly.
pub fn ruin_probability(query: &RuinQuery) -> Result<RuinResult> {
    match query.principle {
        Principle::AggregateReported => solve_reported_aggregate(query),
        Principle::AggregateSettled => solve_settled_aggregate(query),
        Principle::ReportedCount => solve_reported_count(query),
        Principle::SettledCount => solve_settled_count(query),
    }
}

/// Ruin probability under premiums reacting to the aggregate reported
/// amount `X + Y`.
pub fn solve_reported_aggregate(query: &RuinQuery) -> Result<RuinResult> {
    solve_family(query, Principle::AggregateReported)
}

/// Ruin probability under premiums reacting to the aggregate settled
/// amount, including by-claims delayed from the previous period.
pub fn solve_settled_aggregate(query: &RuinQuery) -> Result<RuinResult> {
    solve_family(query, Principle::AggregateSettled)
}

/// Ruin probability under premiums reacting to the reported claim count.
pub fn solve_reported_count(query: &RuinQuery) -> Result<RuinResult> {
    solve_family(query, Principle::ReportedCount)
}

/// Ruin probability under premiums reacting to the settled claim count.
pub fn solve_settled_count(query: &RuinQuery) -> Result<RuinResult> {
    solve_family(query, Principle::SettledCount)
}

fn solve_family(query: &RuinQuery, expected: Principle) -> Result<RuinResult> {
    if query.principle != expected {
        return Err(Error::Query(format!(
            "query names principle {} but was passed to the {} solver",
            query.principle, expected
        )));
    }
    query.validate()?;
    let start = Instant::now();

    let c_max = query.scale.max_premium() as usize;
    let hmax = query.u_target() + query.horizon as usize * c_max;
    let tables = DistTables::build(&query.dist, c_max, hmax, expected.is_settled())?;

    let (final_layer, grid) = match expected {
        Principle::AggregateReported => reported::solve(query, &tables, false),
        Principle::ReportedCount => reported::solve(query, &tables, true),
        Principle::AggregateSettled => settled::solve(query, &tables, false)?,
        Principle::SettledCount => settled::solve(query, &tables, true)?,
    };

    let value = if query.u0 < 0 {
        1.0
    } else if query.horizon == 0 {
        0.0
    } else {
        final_layer.psi[query.initial_level][query.u_target()]
    };

    Ok(RuinResult {
        value,
        truncation_bound: 0.0,
        elapsed: start.elapsed(),
        grid,
        final_layer,
    })
}

/// Shared layer-iteration context.
pub(crate) struct SolveCtx<'a> {
    pub t: &'a DistTables,
    pub rules: &'a RuleSet,
    pub q: f64,
    pub l: usize,
    /// Premiums by zero-based level.
    pub c: Vec<usize>,
    pub c_max: usize,
    pub u_target: usize,
    pub horizon: u32,
}

impl<'a> SolveCtx<'a> {
    pub fn new(query: &'a RuinQuery, tables: &'a DistTables) -> Self {
        let c: Vec<usize> = query
            .scale
            .as_slice()
            .iter()
            .map(|&p| p as usize)
            .collect();
        SolveCtx {
            t: tables,
            rules: &query.rules,
            q: query.q,
            l: query.scale.len(),
            c_max: query.scale.max_premium() as usize,
            c,
            u_target: query.u_target(),
            horizon: query.horizon,
        }
    }

    /// Surplus range layer `n` must cover so that all later layers can read
    /// it: references step down by at most `c_max` per period.
    pub fn u_max_at(&self, n: u32) -> usize {
        self.u_target + (self.horizon - n) as usize * self.c_max
    }

    /// Base value shared by `psi` and `psi'` at one remaining period:
    /// ruin happens iff the amount settled now exceeds the available funds
    /// `h`.
    #[inline]
    pub fn base(&self, h: usize) -> f64 {
        (self.t.tail_x[h] + (1.0 - self.q) * self.t.xts[h]).clamp(0.0, 1.0)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::JointClaimPmf;

    fn tiny_query(principle: Principle) -> RuinQuery {
        RuinQuery {
            principle,
            dist: JointClaimPmf::from_table(&[(0, 0, 0.5), (2, 1, 0.5)], 1e-9).unwrap(),
            q: 0.5,
            scale: PremiumScale::new(&[2, 3]).unwrap(),
            rules: RuleSet::threshold(2, 0, 2).unwrap(),
            u0: 4,
            initial_level: 0,
            horizon: 3,
            emit_grid: false,
        }
    }

    #[test]
    fn shortfall_reduction_shifts_reported_layers() {
        let result = ruin_probability(&tiny_query(Principle::AggregateReported)).unwrap();
        let layer = result.final_layer();
        // A pending claim the surplus covers is a plain shift.
        for z in 0..=4 {
            let direct = shortfall_reduce(layer, 0, 4, z).unwrap();
            let shifted = layer.psi(0, 4 - z).unwrap();
            assert!((direct - shifted).abs() <= 1e-15);
        }
        // Beyond surplus plus the incoming premium it is unpayable.
        let premium = 2;
        assert_eq!(shortfall_reduce(layer, 0, 4, 4 + premium + 1).unwrap(), 1.0);
        // In between, the stored zero-surplus shortfall value applies and
        // sits strictly between the neighbouring regimes.
        let between = shortfall_reduce(layer, 0, 4, 4 + premium).unwrap();
        let covered = shortfall_reduce(layer, 0, 4, 4).unwrap();
        assert!(covered < between && between < 1.0);
    }

    #[test]
    fn shortfall_reduction_rejects_settled_layers() {
        for principle in [Principle::AggregateSettled, Principle::SettledCount] {
            let result = ruin_probability(&tiny_query(principle)).unwrap();
            let err = shortfall_reduce(result.final_layer(), 0, 4, 1).unwrap_err();
            assert!(matches!(err, Error::Internal(_)));
        }
    }
}
