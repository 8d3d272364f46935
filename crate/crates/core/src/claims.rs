//! Joint distributions of a main claim `X` and its induced by-claim `Y`.
//!
//! Both claims are non-negative integers.  A by-claim can only occur
//! together with a main claim, so every distribution here satisfies
//! `f(0, y) = 0` for `y >= 1`; this is validated at construction rather
//! than silently repaired.
//!
//! Three analytic families cover the usual benchmark cases, and arbitrary
//! finite tables can be loaded for everything else:
//!
//! * [`JointClaimPmf::geometric_h`] — the by-claim always equals the main
//!   claim (perfect positive dependence),
//! * [`JointClaimPmf::geometric_l`] — a geometric main claim which, when
//!   positive, triggers an independent geometric by-claim,
//! * [`JointClaimPmf::mixture`] — a pointwise convex combination of two
//!   component distributions,
//! * [`JointClaimPmf::from_table`] — an explicit finite table.
//!
//! Besides pointwise evaluation the type exposes the summation kernels the
//! ruin recursions are built from: marginals, the main-claim tail, the
//! excess-mass function [`JointClaimPmf::xi`], and its closed-form total
//! [`JointClaimPmf::xi_tail_sum`].  For the analytic families these use
//! exact geometric identities, so no truncation error enters the solvers.

use crate::{Error, Result};

/// Default bound on the probability mass that may lie outside the cutoff
/// box used for sampling and moment summation.
pub const DEFAULT_TRUNCATION_EPSILON: f64 = 1e-12;

/// Hard cap on cutoff search; reaching it means the requested truncation
/// epsilon is unattainably small for the given tail decay.
const CUTOFF_SEARCH_LIMIT: usize = 5_000_000;

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Family {
    /// `f(x, x) = p (1-p)^x`, zero off the diagonal.
    GeometricH { p: f64 },
    /// `f(0, 0) = p`; `f(x, y) = p (1-p)^x r (1-r)^y` for `x >= 1`.
    GeometricL { p: f64, r: f64 },
    /// `w * left + (1 - w) * right`, evaluated pointwise.
    Mixture {
        weight: f64,
        left: Box<JointClaimPmf>,
        right: Box<JointClaimPmf>,
    },
    /// Dense table `grid[x][y]`; mass not stored in the table is treated as
    /// lying beyond every finite claim size.
    Table {
        grid: Vec<Vec<f64>>,
        /// Per-row sums and their running prefix over `x`.
        row_sum: Vec<f64>,
        col_sum: Vec<f64>,
        /// `1 - total stored mass`, clamped at zero.
        residual: f64,
        /// Structural `y` support per row: `(min, max)` of nonzero entries.
        row_span: Vec<Option<(usize, usize)>>,
    },
}

/// Joint probability mass function of `(X, Y)`.
///
/// Immutable after construction and cheap to share across threads; all
/// evaluation methods take `&self`.
#[derive(Debug, Clone)]
pub struct JointClaimPmf {
    family: Family,
    truncation_epsilon: f64,
    /// Smallest `k` with `P(X > k) <= truncation_epsilon`.
    x_cutoff: usize,
    /// Smallest `k` with `P(Y > k) <= truncation_epsilon`.
    y_cutoff: usize,
}

/// Summary statistics of a joint claim distribution.
///
/// Correlations are `None` when the corresponding variance vanishes, e.g.
/// for a distribution whose by-claim is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimStatistics {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    /// Pearson correlation of the claim amounts `X` and `Y`.
    pub corr_xy: Option<f64>,
    /// Pearson correlation of the claim indicators `1{X > 0}` and `1{Y > 0}`.
    pub corr_counts: Option<f64>,
}

impl JointClaimPmf {
    // -----------------------------------------------------------------------
    // Constructors
    // -----------------------------------------------------------------------

    /// Geometric main claim whose by-claim always equals it:
    /// `f(x, x) = p (1 - p)^x`.
    pub fn geometric_h(p: f64) -> Result<Self> {
        validate_prob_param("p", p)?;
        Self::finish(Family::GeometricH { p }, DEFAULT_TRUNCATION_EPSILON)
    }

    /// Geometric main claim with an independent geometric by-claim attached
    /// to every positive main claim: `f(0, 0) = p` and
    /// `f(x, y) = p (1 - p)^x r (1 - r)^y` for `x >= 1`.
    pub fn geometric_l(p: f64, r: f64) -> Result<Self> {
        validate_prob_param("p", p)?;
        validate_prob_param("r", r)?;
        Self::finish(Family::GeometricL { p, r }, DEFAULT_TRUNCATION_EPSILON)
    }

    /// Pointwise convex combination `weight * left + (1 - weight) * right`.
    pub fn mixture(weight: f64, left: JointClaimPmf, right: JointClaimPmf) -> Result<Self> {
        if !weight.is_finite() || !(0.0..=1.0).contains(&weight) {
            return Err(Error::Distribution(format!(
                "mixture weight must lie in [0, 1], got {weight}"
            )));
        }
        let eps = left.truncation_epsilon.min(right.truncation_epsilon);
        Self::finish(
            Family::Mixture {
                weight,
                left: Box::new(left),
                right: Box::new(right),
            },
            eps,
        )
    }

    /// Builds a distribution from explicit `(x, y, probability)` cells.
    ///
    /// The cells must be free of duplicates, non-negative, respect
    /// `f(0, y) = 0` for `y >= 1`, and sum to at most one.  A total below
    /// `1 - truncation_epsilon` is rejected; a smaller deficit is recorded
    /// as [`JointClaimPmf::residual_mass`] and treated as probability of a
    /// claim larger than any finite surplus.
    pub fn from_table(cells: &[(i64, i64, f64)], truncation_epsilon: f64) -> Result<Self> {
        validate_epsilon(truncation_epsilon)?;
        if cells.is_empty() {
            return Err(Error::Distribution("table has no cells".into()));
        }
        let mut x_max = 0usize;
        let mut y_max = 0usize;
        for &(x, y, p) in cells {
            if x < 0 || y < 0 {
                return Err(Error::Distribution(format!(
                    "table cell ({x}, {y}) has a negative claim size"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Distribution(format!(
                    "table cell ({x}, {y}) has invalid probability {p}"
                )));
            }
            if x == 0 && y > 0 && p > 0.0 {
                return Err(Error::Distribution(format!(
                    "table assigns probability {p} to (0, {y}): a by-claim requires a main claim"
                )));
            }
            x_max = x_max.max(x as usize);
            y_max = y_max.max(y as usize);
        }
        let mut grid = vec![vec![0.0f64; y_max + 1]; x_max + 1];
        let mut seen = vec![vec![false; y_max + 1]; x_max + 1];
        let mut total = 0.0f64;
        for &(x, y, p) in cells {
            let (x, y) = (x as usize, y as usize);
            if seen[x][y] {
                return Err(Error::Distribution(format!(
                    "table lists cell ({x}, {y}) more than once"
                )));
            }
            seen[x][y] = true;
            grid[x][y] = p;
            total += p;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::Distribution(format!(
                "table mass {total} exceeds 1"
            )));
        }
        if total < 1.0 - truncation_epsilon {
            return Err(Error::Distribution(format!(
                "table mass {total} falls short of 1 by more than the truncation epsilon {truncation_epsilon}"
            )));
        }
        let residual = (1.0 - total).max(0.0);
        let row_sum: Vec<f64> = grid.iter().map(|r| r.iter().sum()).collect();
        let col_sum: Vec<f64> = (0..=y_max)
            .map(|y| grid.iter().map(|r| r[y]).sum())
            .collect();
        let row_span: Vec<Option<(usize, usize)>> = grid
            .iter()
            .map(|r| {
                let lo = r.iter().position(|&p| p > 0.0)?;
                let hi = r.iter().rposition(|&p| p > 0.0)?;
                Some((lo, hi))
            })
            .collect();
        Self::finish(
            Family::Table {
                grid,
                row_sum,
                col_sum,
                residual,
                row_span,
            },
            truncation_epsilon,
        )
    }

    /// Returns the same distribution with a different truncation epsilon
    /// (and correspondingly recomputed cutoffs).
    pub fn with_truncation_epsilon(self, eps: f64) -> Result<Self> {
        validate_epsilon(eps)?;
        if let Family::Table { residual, .. } = &self.family {
            if *residual > eps {
                return Err(Error::Distribution(format!(
                    "table residual mass {residual} exceeds requested truncation epsilon {eps}"
                )));
            }
        }
        Self::finish(self.family, eps)
    }

    fn finish(family: Family, eps: f64) -> Result<Self> {
        let mut pmf = JointClaimPmf {
            family,
            truncation_epsilon: eps,
            x_cutoff: 0,
            y_cutoff: 0,
        };
        pmf.x_cutoff = cutoff_search(eps, |k| pmf.tail_x_at(k))?;
        pmf.y_cutoff = cutoff_search(eps, |k| pmf.tail_y_at(k))?;
        Ok(pmf)
    }

    // -----------------------------------------------------------------------
    // Pointwise evaluation
    // -----------------------------------------------------------------------

    /// `P(X = x, Y = y)`; rejects negative arguments.
    pub fn pmf(&self, x: i64, y: i64) -> Result<f64> {
        if x < 0 || y < 0 {
            return Err(Error::Domain(format!(
                "claim sizes must be non-negative, got ({x}, {y})"
            )));
        }
        Ok(self.pmf_at(x as usize, y as usize))
    }

    /// `P(X = x, Y = y)` without domain checks; total over all of `usize`.
    pub fn pmf_at(&self, x: usize, y: usize) -> f64 {
        match &self.family {
            Family::GeometricH { p } => {
                if x == y {
                    geom_mass(*p, x)
                } else {
                    0.0
                }
            }
            Family::GeometricL { p, r } => {
                if x == 0 {
                    if y == 0 {
                        *p
                    } else {
                        0.0
                    }
                } else {
                    geom_mass(*p, x) * geom_mass(*r, y)
                }
            }
            Family::Mixture {
                weight,
                left,
                right,
            } => weight * left.pmf_at(x, y) + (1.0 - weight) * right.pmf_at(x, y),
            Family::Table { grid, .. } => {
                if x < grid.len() && y < grid[x].len() {
                    grid[x][y]
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(X = x)`; rejects negative arguments.
    pub fn marginal_x(&self, x: i64) -> Result<f64> {
        if x < 0 {
            return Err(Error::Domain(format!(
                "claim sizes must be non-negative, got {x}"
            )));
        }
        Ok(self.marginal_x_at(x as usize))
    }

    pub fn marginal_x_at(&self, x: usize) -> f64 {
        match &self.family {
            Family::GeometricH { p } => geom_mass(*p, x),
            Family::GeometricL { p, .. } => geom_mass(*p, x),
            Family::Mixture {
                weight,
                left,
                right,
            } => weight * left.marginal_x_at(x) + (1.0 - weight) * right.marginal_x_at(x),
            Family::Table { row_sum, .. } => row_sum.get(x).copied().unwrap_or(0.0),
        }
    }

    /// `P(Y = y)`; rejects negative arguments.
    pub fn marginal_y(&self, y: i64) -> Result<f64> {
        if y < 0 {
            return Err(Error::Domain(format!(
                "claim sizes must be non-negative, got {y}"
            )));
        }
        Ok(self.marginal_y_at(y as usize))
    }

    pub fn marginal_y_at(&self, y: usize) -> f64 {
        match &self.family {
            Family::GeometricH { p } => geom_mass(*p, y),
            Family::GeometricL { p, r } => {
                let tail = (1.0 - p) * geom_mass(*r, y);
                if y == 0 {
                    p + tail
                } else {
                    tail
                }
            }
            Family::Mixture {
                weight,
                left,
                right,
            } => weight * left.marginal_y_at(y) + (1.0 - weight) * right.marginal_y_at(y),
            Family::Table { col_sum, .. } => col_sum.get(y).copied().unwrap_or(0.0),
        }
    }

    /// `P(X > n)`.  Defined for all integers: `n < 0` gives 1.
    ///
    /// Uses the closed-form geometric tail for the analytic families and the
    /// complement of the stored mass for tables, so no truncation enters.
    pub fn tail_x(&self, n: i64) -> f64 {
        if n < 0 {
            return 1.0;
        }
        self.tail_x_at(n as usize)
    }

    fn tail_x_at(&self, n: usize) -> f64 {
        match &self.family {
            Family::GeometricH { p } | Family::GeometricL { p, .. } => geom_tail(*p, n),
            Family::Mixture {
                weight,
                left,
                right,
            } => weight * left.tail_x_at(n) + (1.0 - weight) * right.tail_x_at(n),
            Family::Table {
                row_sum, residual, ..
            } => {
                let covered: f64 = row_sum.iter().take(n + 1).sum();
                (1.0 - covered).max(*residual)
            }
        }
    }

    fn tail_y_at(&self, n: usize) -> f64 {
        match &self.family {
            Family::GeometricH { p } => geom_tail(*p, n),
            Family::GeometricL { p, r } => (1.0 - p) * geom_tail(*r, n),
            Family::Mixture {
                weight,
                left,
                right,
            } => weight * left.tail_y_at(n) + (1.0 - weight) * right.tail_y_at(n),
            Family::Table {
                col_sum, residual, ..
            } => {
                let covered: f64 = col_sum.iter().take(n + 1).sum();
                (1.0 - covered).max(*residual)
            }
        }
    }

    /// `P(X + Y = s)`, the probability mass of the reported aggregate.
    pub fn aggregate_pmf(&self, s: i64) -> Result<f64> {
        if s < 0 {
            return Err(Error::Domain(format!(
                "aggregate claim size must be non-negative, got {s}"
            )));
        }
        let s = s as usize;
        Ok((0..=s).map(|x| self.pmf_at(x, s - x)).sum())
    }

    // -----------------------------------------------------------------------
    // Recursion kernels
    // -----------------------------------------------------------------------

    /// Excess-mass function `xi_y(n) = sum_{x=1..n} f(x, y + n - x)`.
    ///
    /// This is the probability that the period's claims report exactly
    /// `n + y` in total while the main claim alone is at most `n`: the pairs
    /// that stay solvent with available funds `n` only if the by-claim is
    /// delayed, leaving a shortfall of `y` against the next period.
    pub fn xi(&self, y: i64, n: i64) -> Result<f64> {
        if y < 0 || n < 0 {
            return Err(Error::Domain(format!(
                "xi requires non-negative arguments, got (y = {y}, n = {n})"
            )));
        }
        let (y, n) = (y as usize, n as usize);
        Ok((1..=n).map(|x| self.pmf_at(x, y + n - x)).sum())
    }

    /// `sum_{y >= 1} xi_y(n)`, evaluated exactly via
    /// `sum_{x=1..n} [P(X = x) - sum_{y=0..n-x} f(x, y)]`.
    ///
    /// The identity turns the infinite sum over `y` into a finite one, which
    /// is what keeps the recursions free of tail truncation.
    pub fn xi_tail_sum(&self, n: i64) -> Result<f64> {
        if n < 0 {
            return Err(Error::Domain(format!(
                "xi_tail_sum requires a non-negative argument, got {n}"
            )));
        }
        let n = n as usize;
        let mut total = 0.0;
        for x in 1..=n {
            let covered: f64 = (0..=n - x).map(|y| self.pmf_at(x, y)).sum();
            total += self.marginal_x_at(x) - covered;
        }
        Ok(total)
    }

    // -----------------------------------------------------------------------
    // Structure descriptors
    // -----------------------------------------------------------------------

    /// Structural `y`-support for a given `x`: the smallest interval outside
    /// which `f(x, .)` is exactly zero, or `None` if the whole row is zero.
    ///
    /// The upper bound is `usize::MAX` for rows with unbounded support.
    /// Solver loops use this to skip structurally zero regions; it may be a
    /// strict superset of the nonzero cells, never a subset.
    pub fn y_support(&self, x: usize) -> Option<(usize, usize)> {
        match &self.family {
            Family::GeometricH { .. } => Some((x, x)),
            Family::GeometricL { .. } => {
                if x == 0 {
                    Some((0, 0))
                } else {
                    Some((0, usize::MAX))
                }
            }
            Family::Mixture { left, right, .. } => {
                match (left.y_support(x), right.y_support(x)) {
                    (None, s) | (s, None) => s,
                    (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
                }
            }
            Family::Table { row_span, .. } => row_span.get(x).copied().flatten(),
        }
    }

    /// All cells of a finite-support distribution, or `None` if the support
    /// is infinite.  Mixtures are finite when both components are.
    pub fn finite_support(&self) -> Option<Vec<(usize, usize, f64)>> {
        match &self.family {
            Family::GeometricH { .. } | Family::GeometricL { .. } => None,
            Family::Mixture { .. } => {
                // Fall through to the generic walk below only when both
                // components are finite; the grid walk needs a bound.
                let bound = self.finite_bound()?;
                let mut cells = Vec::new();
                for x in 0..=bound.0 {
                    for y in 0..=bound.1 {
                        let p = self.pmf_at(x, y);
                        if p > 0.0 {
                            cells.push((x, y, p));
                        }
                    }
                }
                Some(cells)
            }
            Family::Table { grid, .. } => {
                let mut cells = Vec::new();
                for (x, row) in grid.iter().enumerate() {
                    for (y, &p) in row.iter().enumerate() {
                        if p > 0.0 {
                            cells.push((x, y, p));
                        }
                    }
                }
                Some(cells)
            }
        }
    }

    fn finite_bound(&self) -> Option<(usize, usize)> {
        match &self.family {
            Family::GeometricH { .. } | Family::GeometricL { .. } => None,
            Family::Mixture { left, right, .. } => {
                let (a, b) = left.finite_bound()?;
                let (c, d) = right.finite_bound()?;
                Some((a.max(c), b.max(d)))
            }
            Family::Table { grid, .. } => {
                let x_max = grid.len().saturating_sub(1);
                let y_max = grid.iter().map(|r| r.len()).max().unwrap_or(1) - 1;
                Some((x_max, y_max))
            }
        }
    }

    /// Probability mass not represented by any finite cell (only nonzero for
    /// tables loaded with a small deficit).
    pub fn residual_mass(&self) -> f64 {
        match &self.family {
            Family::Table { residual, .. } => *residual,
            Family::Mixture {
                weight,
                left,
                right,
            } => weight * left.residual_mass() + (1.0 - weight) * right.residual_mass(),
            _ => 0.0,
        }
    }

    pub fn truncation_epsilon(&self) -> f64 {
        self.truncation_epsilon
    }

    /// Smallest `k` with `P(X > k) <= truncation_epsilon`.
    pub fn x_cutoff(&self) -> usize {
        self.x_cutoff
    }

    /// Smallest `k` with `P(Y > k) <= truncation_epsilon`.
    pub fn y_cutoff(&self) -> usize {
        self.y_cutoff
    }

    // -----------------------------------------------------------------------
    // Moments
    // -----------------------------------------------------------------------

    /// Means, variances, and the two dependence summaries.
    ///
    /// Moment sums run over a box chosen so the neglected tail mass is below
    /// `min(truncation_epsilon, 1e-13)`; with the geometric tails of the
    /// analytic families this leaves errors far below common reporting
    /// precision.
    pub fn statistics(&self) -> ClaimStatistics {
        let eps = self.truncation_epsilon.min(1e-13);
        let xc = cutoff_search(eps, |k| self.tail_x_at(k)).unwrap_or(self.x_cutoff);
        let yc = cutoff_search(eps, |k| self.tail_y_at(k)).unwrap_or(self.y_cutoff);

        let mut mean_x = 0.0;
        let mut ex2 = 0.0;
        for x in 1..=xc {
            let p = self.marginal_x_at(x);
            mean_x += x as f64 * p;
            ex2 += (x * x) as f64 * p;
        }
        let mut mean_y = 0.0;
        let mut ey2 = 0.0;
        for y in 1..=yc {
            let p = self.marginal_y_at(y);
            mean_y += y as f64 * p;
            ey2 += (y * y) as f64 * p;
        }
        let var_x = ex2 - mean_x * mean_x;
        let var_y = ey2 - mean_y * mean_y;

        let mut exy = 0.0;
        for x in 1..=xc {
            if let Some((lo, hi)) = self.y_support(x) {
                for y in lo.max(1)..=hi.min(yc) {
                    exy += (x * y) as f64 * self.pmf_at(x, y);
                }
            }
        }
        let cov_xy = exy - mean_x * mean_y;
        let corr_xy = correlation(cov_xy, var_x, var_y);

        // Indicator moments come from the marginals alone: a by-claim
        // requires a main claim, so P(X = 0) is exactly f(0, 0).
        let p_x0 = self.pmf_at(0, 0);
        let p_y0 = self.marginal_y_at(0);
        let n_x = 1.0 - p_x0;
        let n_y = 1.0 - p_y0;
        let p_both = 1.0 - p_x0 - (p_y0 - p_x0);
        let cov_n = p_both - n_x * n_y;
        let corr_counts = correlation(cov_n, n_x * p_x0, n_y * p_y0);

        ClaimStatistics {
            mean_x,
            mean_y,
            var_x,
            var_y,
            corr_xy,
            corr_counts,
        }
    }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

/// `p (1 - p)^k`.
#[inline]
fn geom_mass(p: f64, k: usize) -> f64 {
    p * (1.0 - p).powi(k as i32)
}

/// `(1 - p)^(k + 1)`, the geometric tail `P(X > k)`.
#[inline]
fn geom_tail(p: f64, k: usize) -> f64 {
    (1.0 - p).powi(k as i32 + 1)
}

fn correlation(cov: f64, var_a: f64, var_b: f64) -> Option<f64> {
    if var_a <= 0.0 || var_b <= 0.0 {
        return None;
    }
    Some((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

fn validate_prob_param(name: &str, p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 || p > 1.0 {
        return Err(Error::Distribution(format!(
            "parameter {name} must lie in (0, 1], got {p}"
        )));
    }
    Ok(())
}

fn validate_epsilon(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps <= 0.0 || eps >= 0.1 {
        return Err(Error::Distribution(format!(
            "truncation epsilon must lie in (0, 0.1), got {eps}"
        )));
    }
    Ok(())
}

/// Smallest `k` with `tail(k) <= eps`.
fn cutoff_search(eps: f64, tail: impl Fn(usize) -> f64) -> Result<usize> {
    let mut k = 0;
    while tail(k) > eps {
        k += 1;
        if k > CUTOFF_SEARCH_LIMIT {
            return Err(Error::Distribution(format!(
                "tail does not fall below {eps} within {CUTOFF_SEARCH_LIMIT} steps"
            )));
        }
    }
    Ok(k)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
