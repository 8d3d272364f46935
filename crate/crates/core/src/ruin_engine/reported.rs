//! Backward recursion for the reported premium principles.
//!
//! Under a reported trigger the premium reacts to `X + Y` (or the reported
//! count) regardless of settlement timing.  Two consequences shape the
//! solver:
//!
//! * a delayed by-claim the next period can absorb behaves exactly like an
//!   immediate settlement, so that mass folds into the settled-now term;
//! * the auxiliary process only matters through the shortfall `z - u` at
//!   zero surplus, so per level only the `c_i` values `psi'(0; z)`,
//!   `z = 1..=c_i`, are carried between layers.
//!
//! Pairs whose report total exceeds the available funds `h` but whose main
//! claim alone is payable survive only via delay; grouped by the excess
//! `y = x + Y - h` their mass is `xi_y(h)`, the shared trigger is `h + y`,
//! and excesses beyond every premium are certainly ruinous, which closes
//! the infinite tail via `xi_tail_sum`.

use rayon::prelude::*;

use super::tables::DistTables;
use super::{Aux, DpLayer, PsiGrid, RuinQuery, SolveCtx};

pub(crate) fn solve(
    query: &RuinQuery,
    tables: &DistTables,
    count: bool,
) -> (DpLayer, Option<PsiGrid>) {
    let ctx = SolveCtx::new(query, tables);
    let mut grid = query.emit_grid.then(Vec::new);

    if ctx.horizon == 0 {
        return (empty_layer(&ctx), grid);
    }

    let mut layer = base_layer(&ctx);
    record(&mut grid, &layer, ctx.u_target);
    for n in 2..=ctx.horizon {
        layer = next_layer(&ctx, &layer, n, count);
        record(&mut grid, &layer, ctx.u_target);
    }
    (layer, grid)
}

/// Horizon zero: ruin is impossible for any non-negative surplus.
fn empty_layer(ctx: &SolveCtx) -> DpLayer {
    DpLayer {
        n: 0,
        u_max: ctx.u_target,
        psi: vec![vec![0.0; ctx.u_target + 1]; ctx.l],
        aux: Aux::Reported {
            psi0: (0..ctx.l).map(|i| vec![0.0; ctx.c[i]]).collect(),
        },
        premiums: ctx.c.clone(),
    }
}

/// One remaining period: ruin iff the settled amount exceeds the available
/// funds, identical in form for `psi` and `psi'`.
fn base_layer(ctx: &SolveCtx) -> DpLayer {
    let u_max = ctx.u_max_at(1);
    let psi: Vec<Vec<f64>> = (0..ctx.l)
        .map(|i| (0..=u_max).map(|u| ctx.base(u + ctx.c[i])).collect())
        .collect();
    let psi0: Vec<Vec<f64>> = (0..ctx.l)
        .map(|i| (1..=ctx.c[i]).map(|z| ctx.base(ctx.c[i] - z)).collect())
        .collect();
    DpLayer {
        n: 1,
        u_max,
        psi,
        aux: Aux::Reported { psi0 },
        premiums: ctx.c.clone(),
    }
}

fn next_layer(ctx: &SolveCtx, prev: &DpLayer, n: u32, count: bool) -> DpLayer {
    let Aux::Reported { psi0: prev_psi0 } = &prev.aux else {
        unreachable!("reported solver layers carry Aux::Reported");
    };
    let u_max = ctx.u_max_at(n);
    let step = |i: usize, h: usize| -> f64 {
        if count {
            step_count(ctx, &prev.psi, prev_psi0, i, h)
        } else {
            step_aggregate(ctx, &prev.psi, prev_psi0, i, h)
        }
    };
    let psi: Vec<Vec<f64>> = (0..ctx.l)
        .map(|i| {
            (0..=u_max)
                .into_par_iter()
                .map(|u| step(i, u + ctx.c[i]))
                .collect()
        })
        .collect();
    let psi0: Vec<Vec<f64>> = (0..ctx.l)
        .map(|i| (1..=ctx.c[i]).map(|z| step(i, ctx.c[i] - z)).collect())
        .collect();
    DpLayer {
        n,
        u_max,
        psi,
        aux: Aux::Reported { psi0 },
        premiums: ctx.c.clone(),
    }
}

/// One backward step under the aggregate-reported principle, with
/// available funds `h` (`u + c_i` for `psi`, `c_i - z` for `psi'(0; z)`).
fn step_aggregate(
    ctx: &SolveCtx,
    prev_psi: &[Vec<f64>],
    prev_psi0: &[Vec<f64>],
    i: usize,
    h: usize,
) -> f64 {
    let t = ctx.t;
    let mut acc = ctx.base(h);

    // Report totals the funds can absorb: delayed or not, the next state
    // has surplus h - s and the trigger is s.
    for s in 0..=h {
        let m = t.diag[s];
        if m > 0.0 {
            acc += m * prev_psi[ctx.rules.dest(i, s as u64)][h - s];
        }
    }

    // Overshooting totals survive only when the by-claim is delayed; the
    // excess y over the funds is the next period's up-front burden.
    if ctx.q > 0.0 {
        let mut covered = 0.0;
        for y in 1..=ctx.c_max {
            let mass = t.xi(y, h);
            covered += mass;
            if mass > 0.0 {
                let j = ctx.rules.dest(i, (h + y) as u64);
                let cont = if y <= ctx.c[j] {
                    prev_psi0[j][y - 1]
                } else {
                    1.0
                };
                acc += ctx.q * mass * cont;
            }
        }
        // Excesses above every premium cannot be absorbed by any level.
        acc += ctx.q * (t.xts[h] - covered);
    }
    // Round-off can stray a hair outside [0, 1]; the value is a probability.
    acc.clamp(0.0, 1.0)
}

/// One backward step under the reported-count principle.  The count is 0
/// (no claims), 1 (main claim only), or 2, so the level destinations are
/// fixed per group and the group masses come from marginals and the
/// aggregate mass.
fn step_count(
    ctx: &SolveCtx,
    prev_psi: &[Vec<f64>],
    prev_psi0: &[Vec<f64>],
    i: usize,
    h: usize,
) -> f64 {
    let t = ctx.t;
    let mut acc = ctx.base(h);
    let j0 = ctx.rules.dest(i, 0);
    let j1 = ctx.rules.dest(i, 1);
    let j2 = ctx.rules.dest(i, 2);

    acc += t.fx0[0] * prev_psi[j0][h];

    let row1 = &prev_psi[j1];
    for x in 1..=h {
        let m = t.fx0[x];
        if m > 0.0 {
            acc += m * row1[h - x];
        }
    }

    let row2 = &prev_psi[j2];
    for s in 2..=h {
        let m = t.diag_pos(s);
        if m > 0.0 {
            acc += m * row2[h - s];
        }
    }

    if ctx.q > 0.0 {
        let c_j2 = ctx.c[j2];
        let aux = &prev_psi0[j2];
        let mut covered = 0.0;
        for y in 1..=c_j2 {
            let mass = t.xi(y, h);
            covered += mass;
            acc += ctx.q * mass * aux[y - 1];
        }
        acc += ctx.q * (t.xts[h] - covered);
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
