//! Independent cross-checks for the recursion solvers: a seeded Monte
//! Carlo simulator and an exhaustive path enumerator.
//!
//! Both tools share one implementation of the period dynamics
//! ([`period`]): collect the premium, settle what is due (main claim,
//! by-claim unless delayed, plus any by-claim carried over), check ruin,
//! move the premium level by the principle's trigger.  They differ only in
//! how they traverse the claim space, so agreement between simulator,
//! enumerator, and solver checks three independent formulations of the
//! same model against each other.
//!
//! The simulator is reproducible from `(seed, path index)` alone: each
//! path runs on its own counter-indexed ChaCha stream, so results are
//! bit-identical regardless of how paths are split across threads.  Within
//! a path, each period draws the claim pair first and then — only when a
//! positive by-claim met a genuinely random delay (`0 < q < 1`) — the
//! delay coin.
//!
//! Sampling uses an inverse-CDF table over the distribution's cutoff box;
//! the tail mass beyond the box is mapped to an overflow outcome that
//! ruins the path outright (a claim larger than any reachable surplus),
//! and its size is reported on the estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::bonus_malus::{Principle, RuleSet};
use crate::ruin_engine::RuinQuery;
use crate::{Error, Result};

/// Identifier of the generator scheme recorded on every estimate.
const RNG_ID: &str = "chacha12 stream-per-path (rand_chacha 0.3)";

/// Default branch budget for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

/// A Monte Carlo estimate of a ruin probability.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Fraction of simulated paths that ruined.
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
    /// Normal-approximation 95% interval, clamped to `[0, 1]`.
    pub ci95: (f64, f64),
    pub n_paths: u64,
    pub seed: u64,
    /// Generator scheme, for reproducibility records.
    pub rng_id: String,
    /// Probability mass beyond the sampling box, simulated as certain ruin.
    pub overflow_mass: f64,
}

// ---------------------------------------------------------------------------
// Shared period dynamics
// ---------------------------------------------------------------------------

/// Dynamic state of one surplus path: premium level, current surplus, and the
/// by-claim amount carried over from the previous period.
#[derive(Clone, Copy)]
struct PathState {
    level: usize,
    surplus: i64,
    pending: i64,
}

/// Advances `state` by one period under the drawn claims.  Ruin is a negative
/// surplus in the returned state.
#[inline]
fn period(
    principle: Principle,
    rules: &RuleSet,
    premium: i64,
    state: PathState,
    x: i64,
    y: i64,
    delayed: bool,
) -> PathState {
    let settled_y = if delayed { 0 } else { y };
    let settled = x + settled_y + state.pending;
    let trigger = match principle {
        Principle::AggregateReported => (x + y) as u64,
        Principle::AggregateSettled => settled as u64,
        Principle::ReportedCount => (x > 0) as u64 + (y > 0) as u64,
        Principle::SettledCount => {
            (x > 0) as u64 + (settled_y > 0) as u64 + (state.pending > 0) as u64
        }
    };
    PathState {
        level: rules.dest(state.level, trigger),
        surplus: state.surplus + premium - settled,
        pending: if delayed { y } else { 0 },
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo simulation
// ---------------------------------------------------------------------------

/// Simulates `n_paths` independent surplus paths and estimates the ruin
/// probability of `query`.
///
/// Deterministic in `(query, n_paths, seed)`: thread count and scheduling
/// cannot change the result.
pub fn simulate(query: &RuinQuery, n_paths: u64, seed: u64) -> Result<McEstimate> {
    query.validate()?;
    if n_paths == 0 {
        return Err(Error::Query("paths must be >= 1".into()));
    }
    if query.u0 < 0 {
        return Ok(degenerate_estimate(1.0, n_paths, seed, 0.0));
    }
    if query.horizon == 0 {
        return Ok(degenerate_estimate(0.0, n_paths, seed, 0.0));
    }

    let table = SamplingTable::build(query);
    let premiums: Vec<i64> = query
        .scale
        .as_slice()
        .iter()
        .map(|&c| c as i64)
        .collect();
    let base = ChaCha12Rng::seed_from_u64(seed);

    let ruined: u64 = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = base.clone();
            rng.set_stream(path);
            u64::from(run_path(query, &table, &premiums, &mut rng))
        })
        .sum();

    let n = n_paths as f64;
    let p_hat = ruined as f64 / n;
    let stderr = (p_hat * (1.0 - p_hat) / n).sqrt();
    let half = 1.96 * stderr;
    Ok(McEstimate {
        p_hat,
        stderr,
        ci95: ((p_hat - half).max(0.0), (p_hat + half).min(1.0)),
        n_paths,
        seed,
        rng_id: RNG_ID.to_string(),
        overflow_mass: table.overflow_mass,
    })
}

fn degenerate_estimate(p: f64, n_paths: u64, seed: u64, overflow: f64) -> McEstimate {
    McEstimate {
        p_hat: p,
        stderr: 0.0,
        ci95: (p, p),
        n_paths,
        seed,
        rng_id: RNG_ID.to_string(),
        overflow_mass: overflow,
    }
}

fn run_path(
    query: &RuinQuery,
    table: &SamplingTable,
    premiums: &[i64],
    rng: &mut ChaCha12Rng,
) -> bool {
    let mut state = PathState {
        level: query.initial_level,
        surplus: query.u0,
        pending: 0,
    };
    let coin_needed = query.q > 0.0 && query.q < 1.0;
    for _ in 0..query.horizon {
        let Some((x, y)) = table.draw(rng) else {
            // Overflow: a claim beyond the sampling box dwarfs any surplus.
            return true;
        };
        let delayed = y > 0
            && if coin_needed {
                rng.gen::<f64>() < query.q
            } else {
                query.q == 1.0
            };
        state = period(
            query.principle,
            &query.rules,
            premiums[state.level],
            state,
            x,
            y,
            delayed,
        );
        if state.surplus < 0 {
            return true;
        }
    }
    false
}

/// Inverse-CDF sampling table over the distribution's cutoff box.
struct SamplingTable {
    cells: Vec<(i64, i64)>,
    /// Cumulative probabilities aligned with `cells`.
    cum: Vec<f64>,
    overflow_mass: f64,
}

impl SamplingTable {
    fn build(query: &RuinQuery) -> SamplingTable {
        let d = &query.dist;
        let mut cells = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0f64;
        let push = |x: usize, y: usize, p: f64, acc: &mut f64, cells: &mut Vec<_>, cum: &mut Vec<f64>| {
            if p > 0.0 {
                *acc += p;
                cells.push((x as i64, y as i64));
                cum.push(*acc);
            }
        };
        if let Some(support) = d.finite_support() {
            for (x, y, p) in support {
                push(x, y, p, &mut acc, &mut cells, &mut cum);
            }
        } else {
            let y_box = d.y_cutoff();
            for x in 0..=d.x_cutoff() {
                if let Some((lo, hi)) = d.y_support(x) {
                    for y in lo..=hi.min(y_box.max(x)) {
                        push(x, y, d.pmf_at(x, y), &mut acc, &mut cells, &mut cum);
                    }
                }
            }
        }
        SamplingTable {
            cells,
            cum,
            overflow_mass: (1.0 - acc).max(0.0),
        }
    }

    /// Draws a claim pair; `None` is the overflow outcome.
    #[inline]
    fn draw(&self, rng: &mut ChaCha12Rng) -> Option<(i64, i64)> {
        let r = rng.gen::<f64>();
        let idx = self.cum.partition_point(|&c| c <= r);
        self.cells.get(idx).copied()
    }
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

/// Computes the exact ruin probability of a finite-support query by
/// enumerating every claim/delay path up to the horizon.
///
/// Intended as an oracle for small instances: the branch count grows like
/// `(support size * 2)^horizon` and is checked against `budget` before any
/// work happens.
pub fn exact_enumerate(query: &RuinQuery, budget: u64) -> Result<f64> {
    exact_enumerate_from(query, 0, budget)
}

/// Same as [`exact_enumerate`], but the process starts with an up-front
/// delayed by-claim `pending` that settles in the first period (the
/// auxiliary process behind the `psi'` quantities).
pub fn exact_enumerate_from(query: &RuinQuery, pending: i64, budget: u64) -> Result<f64> {
    query.validate()?;
    if pending < 0 {
        return Err(Error::Domain(format!(
            "up-front delayed by-claim must be non-negative, got {pending}"
        )));
    }
    if query.u0 < 0 {
        return Ok(1.0);
    }
    if query.horizon == 0 {
        return Ok(0.0);
    }
    let cells = query.dist.finite_support().ok_or_else(|| {
        Error::Domain(
            "exhaustive enumeration requires a finite-support (table) distribution".into(),
        )
    })?;
    let residual = query.dist.residual_mass();

    let delay_branches = if query.q > 0.0 && query.q < 1.0 && cells.iter().any(|&(_, y, _)| y > 0)
    {
        2.0
    } else {
        1.0
    };
    let per_period = (cells.len() as f64 + f64::from(residual > 0.0)) * delay_branches;
    let estimate = per_period.powi(query.horizon as i32);
    if estimate > budget as f64 {
        return Err(Error::Budget(format!(
            "enumeration would touch about {estimate:.3e} branches, over the budget of {budget}"
        )));
    }

    let premiums: Vec<i64> = query
        .scale
        .as_slice()
        .iter()
        .map(|&c| c as i64)
        .collect();
    let walk = Walk {
        query,
        cells: &cells,
        residual,
        premiums,
    };
    let start = PathState {
        level: query.initial_level,
        surplus: query.u0,
        pending,
    };
    Ok(walk.ruin_mass(start, query.horizon, 1.0))
}

struct Walk<'a> {
    query: &'a RuinQuery,
    cells: &'a [(usize, usize, f64)],
    residual: f64,
    premiums: Vec<i64>,
}

impl Walk<'_> {
    fn ruin_mass(&self, state: PathState, periods_left: u32, prob: f64) -> f64 {
        if periods_left == 0 || prob == 0.0 {
            return 0.0;
        }
        let q = self.query.q;
        // Mass beyond the table's cells: a claim that ruins on settlement.
        let mut ruined = prob * self.residual;
        for &(x, y, p) in self.cells {
            let branch = prob * p;
            let mut outcomes: [(f64, bool); 2] = [(0.0, false); 2];
            let n_outcomes = if y == 0 || q == 0.0 {
                outcomes[0] = (branch, false);
                1
            } else if q == 1.0 {
                outcomes[0] = (branch, true);
                1
            } else {
                outcomes[0] = (branch * (1.0 - q), false);
                outcomes[1] = (branch * q, true);
                2
            };
            for &(mass, delayed) in &outcomes[..n_outcomes] {
                let next = period(
                    self.query.principle,
                    &self.query.rules,
                    self.premiums[state.level],
                    state,
                    x as i64,
                    y as i64,
                    delayed,
                );
                if next.surplus < 0 {
                    ruined += mass;
                } else {
                    ruined += self.ruin_mass(next, periods_left - 1, mass);
                }
            }
        }
        ruined
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bonus_malus::PremiumScale;
    use crate::claims::JointClaimPmf;
    use approx::assert_abs_diff_eq;

    fn small_query(q: f64, u0: i64) -> RuinQuery {
        let dist = JointClaimPmf::from_table(
            &[(0, 0, 0.25), (2, 1, 0.25), (4, 0, 0.25), (1, 3, 0.25)],
            1e-9,
        )
        .unwrap();
        RuinQuery {
            principle: Principle::AggregateReported,
            dist,
            q,
            scale: PremiumScale::new(&[1, 2, 3]).unwrap(),
            rules: RuleSet::threshold(3, 0, 3).unwrap(),
            u0,
            initial_level: 1,
            horizon: 4,
            emit_grid: false,
        }
    }

    #[test]
    fn simulation_is_reproducible_and_seed_sensitive() {
        let query = small_query(0.4, 3);
        let a = simulate(&query, 20_000, 7).unwrap();
        let b = simulate(&query, 20_000, 7).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        let c = simulate(&query, 20_000, 8).unwrap();
        assert_ne!(a.p_hat, c.p_hat);
        assert_eq!(a.rng_id, RNG_ID);
    }

    #[test]
    fn simulation_is_thread_count_independent() {
        let query = small_query(0.4, 3);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate(&query, 10_000, 11).unwrap().p_hat)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn degenerate_cases_are_exact() {
        let mut query = small_query(0.5, -1);
        assert_eq!(simulate(&query, 100, 0).unwrap().p_hat, 1.0);
        assert_eq!(exact_enumerate(&query, 1_000_000).unwrap(), 1.0);
        query.u0 = 3;
        query.horizon = 0;
        assert_eq!(simulate(&query, 100, 0).unwrap().p_hat, 0.0);
        assert_eq!(exact_enumerate(&query, 1_000_000).unwrap(), 0.0);
    }

    #[test]
    fn zero_paths_is_rejected() {
        let err = simulate(&small_query(0.5, 3), 0, 1).unwrap_err();
        assert!(matches!(err, Error::Query(ref m) if m.contains("paths")));
    }

    #[test]
    fn enumeration_respects_its_budget() {
        let err = exact_enumerate(&small_query(0.5, 3), 10).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }

    #[test]
    fn enumeration_requires_finite_support() {
        let mut query = small_query(0.5, 3);
        query.dist = JointClaimPmf::geometric_h(1.0 / 6.0).unwrap();
        let err = exact_enumerate(&query, 1_000_000).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("finite-support")));
    }

    #[test]
    fn certain_and_impossible_ruin() {
        let safe = JointClaimPmf::from_table(&[(0, 0, 1.0)], 1e-9).unwrap();
        let mut query = small_query(0.5, 0);
        query.dist = safe;
        assert_eq!(exact_enumerate(&query, 1_000_000).unwrap(), 0.0);
        assert_eq!(simulate(&query, 1_000, 3).unwrap().p_hat, 0.0);

        let fatal = JointClaimPmf::from_table(&[(50, 0, 1.0)], 1e-9).unwrap();
        query.dist = fatal;
        assert_eq!(exact_enumerate(&query, 1_000_000).unwrap(), 1.0);
        assert_eq!(simulate(&query, 1_000, 3).unwrap().p_hat, 1.0);
    }

    #[test]
    fn simulation_brackets_enumeration() {
        for q in [0.0, 0.3, 1.0] {
            let query = small_query(q, 2);
            let exact = exact_enumerate(&query, 10_000_000).unwrap();
            let est = simulate(&query, 200_000, 42).unwrap();
            let slack = 4.0 * est.stderr.max(1e-4);
            assert!(
                (est.p_hat - exact).abs() <= slack,
                "q={q}: estimate {} vs exact {exact} (slack {slack})",
                est.p_hat
            );
        }
    }

    #[test]
    fn upfront_pending_claim_raises_the_risk() {
        let query = small_query(0.5, 3);
        let base = exact_enumerate(&query, 10_000_000).unwrap();
        let loaded = exact_enumerate_from(&query, 2, 10_000_000).unwrap();
        assert!(loaded >= base);
        // A pending claim beyond funds ruins immediately.
        let huge = exact_enumerate_from(&query, 100, 10_000_000).unwrap();
        assert_abs_diff_eq!(huge, 1.0, epsilon = 1e-12);
    }
}
