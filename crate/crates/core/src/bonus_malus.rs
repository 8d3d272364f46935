//! Premium scales, premium transition rules, and the Markov analysis of the
//! resulting premium-level chain.
//!
//! A bonus-malus system moves the insurer's premium through a finite,
//! strictly increasing scale `c_1 < c_2 < ... < c_l`.  After each period a
//! deterministic rule maps the period's claim experience — its *trigger* —
//! to the next level.  Four trigger statistics are in use, captured by
//! [`Principle`]: the aggregate reported amount, the aggregate settled
//! amount, the reported claim count, and the settled claim count.
//!
//! Under the two *reported* principles the trigger depends only on the
//! period's own claims, so the level process is a time-homogeneous Markov
//! chain; [`transition_matrix`] builds its one-step matrix and
//! [`stationary_distribution`] solves for the long-run level occupancy.
//! Under the *settled* principles the trigger also counts a by-claim
//! delayed from the previous period, the chain picks up a hidden carry-over
//! state, and a one-step level matrix no longer exists; those requests are
//! rejected rather than approximated.

use crate::claims::JointClaimPmf;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Premium principles
// ---------------------------------------------------------------------------

/// The claim statistic a bonus-malus rule reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Principle {
    /// Trigger is `X + Y`, regardless of settlement timing.
    AggregateReported,
    /// Trigger is the amount actually paid in the period, including a
    /// by-claim delayed from the previous one.
    AggregateSettled,
    /// Trigger is `1{X > 0} + 1{Y > 0}`.
    ReportedCount,
    /// Trigger is the number of payments settled in the period (0..=3).
    SettledCount,
}

impl Principle {
    pub const ALL: [Principle; 4] = [
        Principle::AggregateReported,
        Principle::AggregateSettled,
        Principle::ReportedCount,
        Principle::SettledCount,
    ];

    /// Whether the trigger counts settled rather than reported claims.
    pub fn is_settled(self) -> bool {
        matches!(self, Principle::AggregateSettled | Principle::SettledCount)
    }

    /// Whether the trigger is a claim count rather than an amount.
    pub fn is_count(self) -> bool {
        matches!(self, Principle::ReportedCount | Principle::SettledCount)
    }

    pub fn name(self) -> &'static str {
        match self {
            Principle::AggregateReported => "aggregate_reported",
            Principle::AggregateSettled => "aggregate_settled",
            Principle::ReportedCount => "reported_count",
            Principle::SettledCount => "settled_count",
        }
    }
}

impl std::fmt::Display for Principle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Premium scale
// ---------------------------------------------------------------------------

/// A strictly increasing scale of integer premiums `c_1 < ... < c_l`.
///
/// Levels are indexed from zero throughout the code base; user-facing
/// configuration and reports use the conventional one-based labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PremiumScale {
    levels: Vec<u32>,
}

impl PremiumScale {
    pub fn new(levels: &[u32]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Rules("premium scale is empty".into()));
        }
        if levels[0] == 0 {
            return Err(Error::Rules("premiums must be positive integers".into()));
        }
        for w in levels.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Rules(format!(
                    "premium scale must be strictly increasing, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(PremiumScale {
            levels: levels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Premium at a zero-based level index.
    pub fn premium(&self, level: usize) -> u32 {
        self.levels[level]
    }

    /// The largest premium `c_l`.
    pub fn max_premium(&self) -> u32 {
        *self.levels.last().unwrap()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.levels
    }
}

// ---------------------------------------------------------------------------
// Transition rules
// ---------------------------------------------------------------------------

/// One band of a tabular rule: triggers in `[lo, hi]` (inclusive; `hi =
/// None` means unbounded) move the given level to `dest`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBand {
    pub lo: u64,
    pub hi: Option<u64>,
    pub dest: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum RuleKind {
    /// Trigger `s <= down_max` moves one level down (floored at the bottom),
    /// `down_max < s <= stay_max` stays, larger triggers move one level up
    /// (capped at the top).
    Threshold { down_max: u64, stay_max: u64 },
    /// Explicit bands per level, validated to cover every trigger exactly
    /// once with an unbounded final band.
    Table { bands: Vec<Vec<RuleBand>> },
}

/// A deterministic, total premium transition rule for a scale of
/// `level_count` levels: every (level, trigger) pair has exactly one
/// destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    level_count: usize,
    kind: RuleKind,
}

impl RuleSet {
    /// The two-threshold rule used by the benchmark systems.
    pub fn threshold(level_count: usize, down_max: u64, stay_max: u64) -> Result<Self> {
        if level_count == 0 {
            return Err(Error::Rules("rule set needs at least one level".into()));
        }
        if down_max > stay_max {
            return Err(Error::Rules(format!(
                "threshold rule requires down_max <= stay_max, got ({down_max}, {stay_max})"
            )));
        }
        Ok(RuleSet {
            level_count,
            kind: RuleKind::Threshold {
                down_max,
                stay_max,
            },
        })
    }

    /// An explicit tabular rule.  `bands[i]` lists the bands for zero-based
    /// level `i`; they must start at trigger 0, be contiguous, and end with
    /// an unbounded band, so the rule is total.
    pub fn from_bands(level_count: usize, bands: Vec<Vec<RuleBand>>) -> Result<Self> {
        if level_count == 0 {
            return Err(Error::Rules("rule set needs at least one level".into()));
        }
        if bands.len() != level_count {
            return Err(Error::Rules(format!(
                "rule table covers {} levels but the scale has {level_count}",
                bands.len()
            )));
        }
        for (i, level_bands) in bands.iter().enumerate() {
            let mut expected_lo = Some(0u64);
            if level_bands.is_empty() {
                return Err(Error::Rules(format!("level {} has no bands", i + 1)));
            }
            for band in level_bands {
                let lo = match expected_lo {
                    Some(lo) => lo,
                    None => {
                        return Err(Error::Rules(format!(
                            "level {}: band starting at {} follows an unbounded band",
                            i + 1,
                            band.lo
                        )))
                    }
                };
                if band.lo != lo {
                    return Err(Error::Rules(format!(
                        "level {}: bands must be contiguous from 0; expected a band starting at {lo}, got {}",
                        i + 1,
                        band.lo
                    )));
                }
                if let Some(hi) = band.hi {
                    if hi < band.lo {
                        return Err(Error::Rules(format!(
                            "level {}: band [{}, {hi}] is empty",
                            i + 1,
                            band.lo
                        )));
                    }
                    expected_lo = Some(hi + 1);
                } else {
                    expected_lo = None;
                }
                if band.dest >= level_count {
                    return Err(Error::Rules(format!(
                        "level {}: destination {} is outside the scale",
                        i + 1,
                        band.dest + 1
                    )));
                }
            }
            if expected_lo.is_some() {
                return Err(Error::Rules(format!(
                    "level {}: the final band must be unbounded so every trigger is covered",
                    i + 1
                )));
            }
        }
        Ok(RuleSet {
            level_count,
            kind: RuleKind::Table { bands },
        })
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    /// Destination level for a trigger, with the level index checked.
    pub fn apply(&self, level: usize, trigger: u64) -> Result<usize> {
        if level >= self.level_count {
            return Err(Error::Domain(format!(
                "level index {level} is outside the scale of {} levels",
                self.level_count
            )));
        }
        Ok(self.dest(level, trigger))
    }

    /// Destination level for a trigger; `level` must be in range.
    #[inline]
    pub fn dest(&self, level: usize, trigger: u64) -> usize {
        debug_assert!(level < self.level_count);
        match &self.kind {
            RuleKind::Threshold {
                down_max,
                stay_max,
            } => {
                if trigger <= *down_max {
                    level.saturating_sub(1)
                } else if trigger <= *stay_max {
                    level
                } else {
                    (level + 1).min(self.level_count - 1)
                }
            }
            RuleKind::Table { bands } => {
                let band = bands[level]
                    .iter()
                    .find(|b| trigger >= b.lo && b.hi.is_none_or(|hi| trigger <= hi))
                    .expect("rule bands are total by construction");
                band.dest
            }
        }
    }

    /// Smallest trigger value `S` beyond which the rule is constant: every
    /// trigger `s >= S` has the same destination as `S` on every level.
    ///
    /// Totality guarantees such a value exists (the last band of each level
    /// is unbounded); it is what lets the solvers collapse infinite claim
    /// tails into finitely many terms.
    pub fn saturation_start(&self) -> u64 {
        match &self.kind {
            RuleKind::Threshold { stay_max, .. } => stay_max + 1,
            RuleKind::Table { bands } => bands
                .iter()
                .map(|level_bands| level_bands.last().map_or(0, |b| b.lo))
                .max()
                .unwrap_or(0),
        }
    }
}

// ---------------------------------------------------------------------------
// Markov analysis of the level chain
// ---------------------------------------------------------------------------

/// One-step transition matrix of the premium-level chain under a reported
/// premium principle.
///
/// Row `i`, column `j` holds the probability that one period's claims move
/// the level from `i` to `j` (zero-based).  Settled principles are
/// rejected: their trigger includes the by-claim carried over from the
/// previous period, so the level alone is not a Markov state and no
/// time-homogeneous one-step matrix exists.
pub fn transition_matrix(
    dist: &JointClaimPmf,
    rules: &RuleSet,
    principle: Principle,
) -> Result<Vec<Vec<f64>>> {
    if principle.is_settled() {
        return Err(Error::NotHomogeneous(format!(
            "{principle} premiums react to the by-claim delayed from the previous period; \
             the premium level alone is then not a Markov state and the level chain has no \
             time-homogeneous one-step transition matrix"
        )));
    }
    let l = rules.level_count();
    let mut matrix = vec![vec![0.0f64; l]; l];
    match principle {
        Principle::AggregateReported => {
            // Group the joint mass by the reported total s = x + y.  Beyond
            // the rule's saturation point every total has the same
            // destination, so the entire remaining tail goes there in one
            // exact step.
            let sat = rules.saturation_start();
            let mut masses = Vec::with_capacity(sat as usize);
            let mut covered = 0.0f64;
            for s in 0..sat {
                let m = dist.aggregate_pmf(s as i64)?;
                masses.push(m);
                covered += m;
            }
            let tail = (1.0 - covered).max(0.0);
            for (i, row) in matrix.iter_mut().enumerate() {
                for (s, &m) in masses.iter().enumerate() {
                    row[rules.dest(i, s as u64)] += m;
                }
                row[rules.dest(i, sat)] += tail;
            }
        }
        Principle::ReportedCount => {
            // A by-claim requires a main claim, so the reported count is 0,
            // 1 (main claim only), or 2, with masses derived exactly from
            // the marginals.
            let none = dist.pmf_at(0, 0);
            let main_only = dist.marginal_y_at(0) - none;
            let both = (1.0 - none - main_only).max(0.0);
            for (i, row) in matrix.iter_mut().enumerate() {
                row[rules.dest(i, 0)] += none;
                row[rules.dest(i, 1)] += main_only;
                row[rules.dest(i, 2)] += both;
            }
        }
        Principle::AggregateSettled | Principle::SettledCount => unreachable!(),
    }
    Ok(matrix)
}

/// Stationary distribution of an irreducible stochastic matrix.
///
/// Solves `pi P = pi` with the normalisation `sum pi = 1` by direct
/// elimination, after checking that the chain is irreducible (otherwise the
/// stationary distribution is not unique and an error is returned).
pub fn stationary_distribution(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let l = matrix.len();
    if l == 0 {
        return Err(Error::Markov("matrix is empty".into()));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != l {
            return Err(Error::Markov(format!(
                "matrix is not square: row {i} has {} entries, expected {l}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Markov(format!(
                "row {i} sums to {sum}, not a stochastic matrix"
            )));
        }
        if row.iter().any(|&p| p < -1e-12 || !p.is_finite()) {
            return Err(Error::Markov(format!("row {i} has invalid entries")));
        }
    }
    if !strongly_connected(matrix) {
        return Err(Error::Markov(
            "chain is not irreducible: some level cannot reach some other level, so the \
             stationary distribution is not unique"
                .into(),
        ));
    }

    // Solve (P^T - I) pi = 0 with the last equation replaced by the
    // normalisation constraint.
    let mut a = vec![vec![0.0f64; l]; l];
    let mut b = vec![0.0f64; l];
    for i in 0..l {
        for j in 0..l {
            a[i][j] = matrix[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[l - 1] = vec![1.0; l];
    b[l - 1] = 1.0;
    let mut pi = solve_dense(a, b)
        .ok_or_else(|| Error::Markov("singular system while solving for the stationary vector".into()))?;

    for p in pi.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-9 {
                return Err(Error::Markov(format!(
                    "solver produced a negative stationary mass {p}"
                )));
            }
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= total;
    }

    // Cross-check the fixed-point property independently of the solve.
    let mut residual = 0.0f64;
    for j in 0..l {
        let image: f64 = (0..l).map(|i| pi[i] * matrix[i][j]).sum();
        residual = residual.max((image - pi[j]).abs());
    }
    if residual > 1e-12 {
        return Err(Error::Internal(format!(
            "stationary residual {residual} exceeds 1e-12"
        )));
    }
    Ok(pi)
}

/// Long-run expected premium `sum_i pi_i c_i`.
pub fn expected_premium(pi: &[f64], scale: &PremiumScale) -> Result<f64> {
    if pi.len() != scale.len() {
        return Err(Error::Rules(format!(
            "stationary vector has {} entries but the scale has {} levels",
            pi.len(),
            scale.len()
        )));
    }
    Ok(pi
        .iter()
        .zip(scale.as_slice())
        .map(|(p, &c)| p * c as f64)
        .sum())
}

/// Strong connectivity of the positive-entry pattern: every state reaches
/// and is reached by state 0.
fn strongly_connected(matrix: &[Vec<f64>]) -> bool {
    let l = matrix.len();
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; l];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..l {
                let edge = if forward {
                    matrix[i][j] > 0.0
                } else {
                    matrix[j][i] > 0.0
                };
                if edge && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count
    };
    reach(true) == l && reach(false) == l
}

/// Dense Gaussian elimination with partial pivoting; returns `None` for a
/// numerically singular system.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        let (b_pivot, b_lower) = b.split_at_mut(col + 1);
        for (row, b_row) in lower.iter_mut().zip(b_lower) {
            let factor = row[col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (target, &p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *target -= factor * p;
            }
            *b_row -= factor * b_pivot[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
