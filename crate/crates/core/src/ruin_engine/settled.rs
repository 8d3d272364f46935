//! Backward recursion for the settled premium principles.
//!
//! A settled trigger counts what is actually paid in the period, including
//! a by-claim delayed from the previous one.  The delay therefore shifts
//! the premium path, the reported-principle shortcut does not apply, and
//! the auxiliary probabilities must be carried on a real grid:
//!
//! * aggregate trigger: `psi'(u; z)` is keyed by `w = u - z` and by `z`
//!   itself (the pending amount joins the trigger).  The `z` axis is
//!   stored only up to the transition rule's saturation point — beyond it
//!   every trigger maps the same way, so all larger `z` share one slot,
//!   exactly;
//! * count trigger: the pending by-claim always adds one settled claim, so
//!   `psi'(u; z)` depends on `(u, z)` only through `w` and a single row
//!   per level suffices.
//!
//! Within a period the four claim outcomes are: no by-claim (settle the
//! main claim), both settled, by-claim delayed but eventually payable, and
//! a delayed by-claim no premium level could absorb (ruin next period,
//! summed in closed form via marginal complements).

use rayon::prelude::*;

use super::tables::DistTables;
use super::{Aux, DpLayer, PsiGrid, RuinQuery, SolveCtx};
use crate::{Error, Result};

/// Cap on auxiliary-grid entries per layer; rule sets whose saturation
/// point is pathologically large are refused rather than thrashing memory.
const AUX_ENTRY_BUDGET: u64 = 1 << 26;

pub(crate) fn solve(
    query: &RuinQuery,
    tables: &DistTables,
    count: bool,
) -> Result<(DpLayer, Option<PsiGrid>)> {
    let ctx = SolveCtx::new(query, tables);
    let zslots = if count {
        1
    } else {
        (ctx.rules.saturation_start().max(1)) as usize
    };
    let w_dim = ctx.u_max_at(1.min(ctx.horizon)) + ctx.c_max + 1;
    let entries = ctx.l as u64 * zslots as u64 * w_dim as u64;
    if entries > AUX_ENTRY_BUDGET {
        return Err(Error::Budget(format!(
            "auxiliary grid needs {entries} entries (levels {} x pending-claim slots {zslots} x \
             surplus span {w_dim}); the rule set saturates too late for this query",
            ctx.l
        )));
    }

    let mut grid = query.emit_grid.then(Vec::new);
    if ctx.horizon == 0 {
        return Ok((empty_layer(&ctx, count, zslots), grid));
    }

    let mut layer = base_layer(&ctx, count, zslots);
    record(&mut grid, &layer, ctx.u_target);
    for n in 2..=ctx.horizon {
        layer = next_layer(&ctx, &layer, n, count, zslots);
        record(&mut grid, &layer, ctx.u_target);
    }
    Ok((layer, grid))
}

fn aux_dims(ctx: &SolveCtx, n: u32) -> (i64, usize) {
    let w_max = ctx.u_max_at(n) as i64;
    let offset = ctx.c_max;
    (w_max, offset)
}

fn empty_layer(ctx: &SolveCtx, count: bool, zslots: usize) -> DpLayer {
    let (w_max, offset) = (ctx.u_target as i64, ctx.c_max);
    let w_dim = (w_max + offset as i64 + 1) as usize;
    let aux = if count {
        Aux::SettledCount {
            offset,
            w_max,
            grid: vec![vec![0.0; w_dim]; ctx.l],
        }
    } else {
        Aux::SettledAggregate {
            zslots,
            offset,
            w_max,
            grid: vec![vec![vec![0.0; w_dim]; zslots]; ctx.l],
        }
    };
    DpLayer {
        n: 0,
        u_max: ctx.u_target,
        psi: vec![vec![0.0; ctx.u_target + 1]; ctx.l],
        aux,
        premiums: ctx.c.clone(),
    }
}

/// One remaining period.  The pending by-claim is settled immediately, so
/// `psi'` at one period depends on `w = u - z` alone: ruin iff the new
/// settlement exceeds `w + c_i`.
fn base_layer(ctx: &SolveCtx, count: bool, zslots: usize) -> DpLayer {
    let u_max = ctx.u_max_at(1);
    let (w_max, offset) = aux_dims(ctx, 1);
    let psi: Vec<Vec<f64>> = (0..ctx.l)
        .map(|i| (0..=u_max).map(|u| ctx.base(u + ctx.c[i])).collect())
        .collect();
    let base_row = |i: usize| -> Vec<f64> {
        (-(offset as i64)..=w_max)
            .map(|w| {
                if w < -(ctx.c[i] as i64) {
                    1.0
                } else {
                    ctx.base((w + ctx.c[i] as i64) as usize)
                }
            })
            .collect()
    };
    let aux = if count {
        Aux::SettledCount {
            offset,
            w_max,
            grid: (0..ctx.l).map(base_row).collect(),
        }
    } else {
        Aux::SettledAggregate {
            zslots,
            offset,
            w_max,
            grid: (0..ctx.l)
                .map(|i| vec![base_row(i); zslots])
                .collect(),
        }
    };
    DpLayer {
        n: 1,
        u_max,
        psi,
        aux,
        premiums: ctx.c.clone(),
    }
}

fn next_layer(ctx: &SolveCtx, prev: &DpLayer, n: u32, count: bool, zslots: usize) -> DpLayer {
    let u_max = ctx.u_max_at(n);
    let (w_max, offset) = aux_dims(ctx, n);

    let (psi, aux) = if count {
        let Aux::SettledCount {
            grid: prev_aux, ..
        } = &prev.aux
        else {
            unreachable!("settled-count layers carry Aux::SettledCount");
        };
        let psi: Vec<Vec<f64>> = (0..ctx.l)
            .map(|i| {
                (0..=u_max)
                    .into_par_iter()
                    .map(|u| step_count(ctx, &prev.psi, prev_aux, i, u + ctx.c[i], 0))
                    .collect()
            })
            .collect();
        let grid: Vec<Vec<f64>> = (0..ctx.l)
            .map(|i| {
                (-(offset as i64)..=w_max)
                    .into_par_iter()
                    .map(|w| {
                        if w < -(ctx.c[i] as i64) {
                            1.0
                        } else {
                            let h = (w + ctx.c[i] as i64) as usize;
                            step_count(ctx, &prev.psi, prev_aux, i, h, 1)
                        }
                    })
                    .collect()
            })
            .collect();
        (
            psi,
            Aux::SettledCount {
                offset,
                w_max,
                grid,
            },
        )
    } else {
        let Aux::SettledAggregate {
            grid: prev_aux, ..
        } = &prev.aux
        else {
            unreachable!("settled-aggregate layers carry Aux::SettledAggregate");
        };
        let psi: Vec<Vec<f64>> = (0..ctx.l)
            .map(|i| {
                (0..=u_max)
                    .into_par_iter()
                    .map(|u| step_aggregate(ctx, &prev.psi, prev_aux, zslots, i, u + ctx.c[i], 0))
                    .collect()
            })
            .collect();
        let grid: Vec<Vec<Vec<f64>>> = (0..ctx.l)
            .map(|i| {
                (1..=zslots)
                    .map(|slot| {
                        (-(offset as i64)..=w_max)
                            .into_par_iter()
                            .map(|w| {
                                if w < -(ctx.c[i] as i64) {
                                    1.0
                                } else {
                                    let h = (w + ctx.c[i] as i64) as usize;
                                    step_aggregate(
                                        ctx, &prev.psi, prev_aux, zslots, i, h, slot as u64,
                                    )
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        (
            psi,
            Aux::SettledAggregate {
                zslots,
                offset,
                w_max,
                grid,
            },
        )
    };

    DpLayer {
        n,
        u_max,
        psi,
        aux,
        premiums: ctx.c.clone(),
    }
}

/// One backward step under the aggregate-settled principle with available
/// funds `h` and a pending amount `zshift` joining every trigger
/// (`zshift = 0` computes `psi`, otherwise `psi'` at slot `zshift`).
fn step_aggregate(
    ctx: &SolveCtx,
    prev_psi: &[Vec<f64>],
    prev_aux: &[Vec<Vec<f64>>],
    zslots: usize,
    i: usize,
    h: usize,
    zshift: u64,
) -> f64 {
    let t = ctx.t;
    let q = ctx.q;
    let mut acc = ctx.base(h);

    // No by-claim: the trigger is the settled total x + zshift.
    for x in 0..=h {
        let m = t.fx0[x];
        if m > 0.0 {
            let j = ctx.rules.dest(i, x as u64 + zshift);
            acc += m * prev_psi[j][h - x];
        }
    }

    // Both claims settled now.
    if q < 1.0 {
        let settle_now = 1.0 - q;
        for s in 2..=h {
            let m = t.diag_pos(s);
            if m > 0.0 {
                let j = ctx.rules.dest(i, s as u64 + zshift);
                acc += settle_now * m * prev_psi[j][h - s];
            }
        }
    }

    // By-claim delayed: only the main claim and the pending amount count
    // this period; the by-claim becomes the next period's burden.
    if q > 0.0 {
        for x in 1..=h {
            if t.fx[x] <= 0.0 {
                continue;
            }
            let j = ctx.rules.dest(i, x as u64 + zshift);
            let cap = h - x + ctx.c[j];
            // By-claims beyond cap exceed what level j's premium can cover:
            // ruin next period with certainty.
            let mut inner = t.fx[x] - t.prefix2(x, cap);
            if let Some((lo, hi)) = t.y_span[x] {
                let lo = lo.max(1);
                let hi = hi.min(cap);
                if lo <= hi {
                    let frow = t.f_row(x);
                    let base = h - x + ctx.c_max; // index of w = h - x - y at y = 0
                    // Small pending amounts select their own slot...
                    let split = hi.min(zslots - 1);
                    for y in lo..=split {
                        let m = frow[y];
                        if m > 0.0 {
                            inner += m * prev_aux[j][y - 1][base - y];
                        }
                    }
                    // ...while all larger ones share the saturated slot.
                    let bulk_lo = lo.max(zslots);
                    if bulk_lo <= hi {
                        let row = &prev_aux[j][zslots - 1];
                        for y in bulk_lo..=hi {
                            inner += frow[y] * row[base - y];
                        }
                    }
                }
            }
            acc += q * inner;
        }
    }
    acc.clamp(0.0, 1.0)
}

/// One backward step under the settled-count principle with available
/// funds `h`; `shift` is 1 when a pending by-claim settles this period.
fn step_count(
    ctx: &SolveCtx,
    prev_psi: &[Vec<f64>],
    prev_aux: &[Vec<f64>],
    i: usize,
    h: usize,
    shift: u64,
) -> f64 {
    let t = ctx.t;
    let q = ctx.q;
    let mut acc = ctx.base(h);
    let j0 = ctx.rules.dest(i, shift);
    let j1 = ctx.rules.dest(i, 1 + shift);
    let j2 = ctx.rules.dest(i, 2 + shift);

    acc += t.fx0[0] * prev_psi[j0][h];

    let row1 = &prev_psi[j1];
    for x in 1..=h {
        let m = t.fx0[x];
        if m > 0.0 {
            acc += m * row1[h - x];
        }
    }

    if q < 1.0 {
        let settle_now = 1.0 - q;
        let row2 = &prev_psi[j2];
        for s in 2..=h {
            let m = t.diag_pos(s);
            if m > 0.0 {
                acc += settle_now * m * row2[h - s];
            }
        }
    }

    if q > 0.0 {
        let c_j1 = ctx.c[j1] as i64;
        let aux = &prev_aux[j1];
        // Payable delayed by-claims, grouped by the carried-over state
        // w = h - x - y: the mass at fixed w is an anti-diagonal sum with
        // the main claim capped at h.
        let mut delayed = 0.0;
        for w in -c_j1..=(h as i64 - 2) {
            let m = (h as i64 - w) as usize;
            let mass = t.diag_prefix(m, h.min(m - 1));
            if mass > 0.0 {
                delayed += mass * aux[(w + ctx.c_max as i64) as usize];
            }
        }
        // Unpayable delayed by-claims.
        let mut unpayable = 0.0;
        for x in 1..=h {
            unpayable += t.fx[x] - t.prefix2(x, h - x + ctx.c[j1]);
        }
        acc += q * (delayed + unpayable);
    }
    acc.clamp(0.0, 1.0)
}

fn record(grid: &mut Option<PsiGrid>, layer: &DpLayer, u_target: usize) {
    if let Some(layers) = grid {
        layers.push(
            layer
                .psi
                .iter()
                .map(|row| row[..=u_target].to_vec())
                .collect(),
        );
    }
}
