//! Precomputed summation kernels shared by the backward recursions.
//!
//! Every quantity the per-cell recursion steps need is reduced here to an
//! O(1) lookup or a short dot product: joint masses, marginals, geometric
//! tails, aggregate masses and their partial anti-diagonal sums, the
//! excess-mass function `xi`, and its total.  All tables are exact up to
//! floating-point rounding — tails use closed forms or complements of fully
//! summed prefixes, never an epsilon cutoff.

use crate::claims::JointClaimPmf;
use crate::{Error, Result};

/// Upper bound on the number of stored table entries; queries that would
/// exceed it are refused rather than silently thrashing memory.
const TABLE_ENTRY_BUDGET: u64 = 1 << 26;

/// Dense kernels for one distribution, sized for one solve.
///
/// `hmax` bounds the "available funds" argument `h = u + c_i` over all
/// layers; `smax = hmax + c_max` bounds aggregate arguments.  The joint
/// grid, `prefix2`, and `diag_prefix` are only materialised when
/// `with_joint` is requested (the settled-trigger solvers need them; the
/// reported-trigger solvers do not).
#[derive(Debug)]
pub(crate) struct DistTables {
    pub hmax: usize,
    pub smax: usize,
    pub c_max: usize,
    /// `P(X = x)` for `x <= hmax`.
    pub fx: Vec<f64>,
    /// `f(x, 0)` for `x <= hmax`.
    pub fx0: Vec<f64>,
    /// `P(X > h)` for `h <= hmax`.
    pub tail_x: Vec<f64>,
    /// `P(X + Y = s)` for `s <= smax`.
    pub diag: Vec<f64>,
    /// `xi[y - 1][h] = xi_y(h)` for `1 <= y <= c_max`, `h <= hmax`.
    xi: Vec<f64>,
    /// `sum_{y >= 1} xi_y(h)` for `h <= hmax`.
    pub xts: Vec<f64>,
    /// Structural y-support per `x`, clipped to `smax`.
    pub y_span: Vec<Option<(usize, usize)>>,
    /// Joint mass `f(x, y)`, row-major with stride `smax + 1`.
    f: Vec<f64>,
    /// `prefix2[x][m] = sum_{y = 0..m} f(x, y)`, stride `smax + 1`.
    prefix2: Vec<f64>,
    /// `diag_prefix[m][x] = sum_{x' = 1..min(x, m-1)} f(x', m - x')`,
    /// stride `hmax + 1`.
    diag_prefix: Vec<f64>,
    has_joint: bool,
}

impl DistTables {
    pub fn build(
        dist: &JointClaimPmf,
        c_max: usize,
        hmax: usize,
        with_joint: bool,
    ) -> Result<Self> {
        let smax = hmax + c_max;
        let h = hmax as u64 + 1;
        let s = smax as u64 + 1;
        let mut entries = h + (c_max as u64) * h;
        if with_joint {
            entries += 3 * h * s;
        }
        if entries > TABLE_ENTRY_BUDGET {
            return Err(Error::Budget(format!(
                "query needs {entries} table entries (surplus + horizon * max premium = {hmax}); \
                 reduce the initial surplus, horizon, or premium scale"
            )));
        }

        let fx: Vec<f64> = (0..=hmax).map(|x| dist.marginal_x_at(x)).collect();
        let fx0: Vec<f64> = (0..=hmax).map(|x| dist.pmf_at(x, 0)).collect();
        let tail_x: Vec<f64> = (0..=hmax).map(|x| dist.tail_x(x as i64)).collect();
        let diag: Vec<f64> = (0..=smax)
            .map(|sum| (0..=sum).map(|x| dist.pmf_at(x, sum - x)).sum())
            .collect();
        let y_span: Vec<Option<(usize, usize)>> = (0..=hmax)
            .map(|x| dist.y_support(x).map(|(lo, hi)| (lo, hi.min(smax))))
            .collect();

        let mut xi = vec![0.0f64; c_max * (hmax + 1)];
        for y in 1..=c_max {
            let row = &mut xi[(y - 1) * (hmax + 1)..y * (hmax + 1)];
            for (hh, slot) in row.iter_mut().enumerate() {
                *slot = (1..=hh).map(|x| dist.pmf_at(x, y + hh - x)).sum();
            }
        }

        // xi_tail_sum via the finite identity
        // sum_{x=1..h} [P(X = x) - sum_{y=0..h-x} f(x, y)], built
        // incrementally: growing h by one extends each inner prefix by one
        // term.
        let mut xts = vec![0.0f64; hmax + 1];
        let mut inner_prefix = vec![0.0f64; hmax + 1];
        // The loop indices are the summation variables of the identity
        // above; iterator adaptors would bury the anti-diagonal `(x, hh - x)`.
        #[allow(clippy::needless_range_loop)]
        for hh in 1..=hmax {
            for x in 1..=hh {
                inner_prefix[x] += dist.pmf_at(x, hh - x);
            }
            xts[hh] = (1..=hh).map(|x| fx[x] - inner_prefix[x]).sum();
        }

        let (f, prefix2, diag_prefix) = if with_joint {
            let stride = smax + 1;
            let mut f = vec![0.0f64; (hmax + 1) * stride];
            for x in 0..=hmax {
                for y in 0..=smax {
                    f[x * stride + y] = dist.pmf_at(x, y);
                }
            }
            let mut prefix2 = vec![0.0f64; (hmax + 1) * stride];
            for x in 0..=hmax {
                let mut acc = 0.0;
                for y in 0..=smax {
                    acc += f[x * stride + y];
                    prefix2[x * stride + y] = acc;
                }
            }
            let xstride = hmax + 1;
            let mut diag_prefix = vec![0.0f64; (smax + 1) * xstride];
            for m in 0..=smax {
                let mut acc = 0.0;
                for x in 0..=hmax {
                    if x >= 1 && x < m && m - x <= smax {
                        acc += f[x * stride + (m - x)];
                    }
                    diag_prefix[m * xstride + x] = acc;
                }
            }
            (f, prefix2, diag_prefix)
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };

        Ok(DistTables {
            hmax,
            smax,
            c_max,
            fx,
            fx0,
            tail_x,
            diag,
            xi,
            xts,
            y_span,
            f,
            prefix2,
            diag_prefix,
            has_joint: with_joint,
        })
    }

    /// `xi_y(h)`.
    #[inline]
    pub fn xi(&self, y: usize, h: usize) -> f64 {
        debug_assert!((1..=self.c_max).contains(&y));
        self.xi[(y - 1) * (self.hmax + 1) + h]
    }

    /// Joint mass row `f(x, 0..=smax)`.
    #[inline]
    pub fn f_row(&self, x: usize) -> &[f64] {
        debug_assert!(self.has_joint);
        let stride = self.smax + 1;
        &self.f[x * stride..(x + 1) * stride]
    }

    /// `sum_{y = 0..m} f(x, y)`.
    #[inline]
    pub fn prefix2(&self, x: usize, m: usize) -> f64 {
        debug_assert!(self.has_joint);
        self.prefix2[x * (self.smax + 1) + m]
    }

    /// `sum_{x = 1..min(x_cap, m-1)} f(x, m - x)`: the mass of pairs with
    /// both claims positive, total `m`, and main claim at most `x_cap`.
    #[inline]
    pub fn diag_prefix(&self, m: usize, x_cap: usize) -> f64 {
        debug_assert!(self.has_joint);
        self.diag_prefix[m * (self.hmax + 1) + x_cap]
    }

    /// `P(X + Y = s, X >= 1, Y >= 1)`, for `s <= hmax`.  Since a by-claim
    /// requires a main claim, this is the aggregate mass minus the `y = 0`
    /// cell — no joint grid needed.
    #[inline]
    pub fn diag_pos(&self, s: usize) -> f64 {
        debug_assert!(s <= self.hmax);
        if s < 2 {
            0.0
        } else {
            self.diag[s] - self.fx0[s]
        }
    }
}
