//! The six acceptance gates for the benchmark suite, one test per gate,
//! each printing a one-line verdict (visible under `--nocapture`).
//!
//! The heavy artifact — all four reference tables recomputed over the
//! full surplus grid — is built once and shared.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use ruinlab_core::bonus_malus::{Principle, RuleSet};
use ruinlab_core::claims::JointClaimPmf;
use ruinlab_core::ruin_engine::{ruin_probability, RuinQuery};
use ruinlab_core::{exact_enumerate, simulate, PremiumScale};
use ruinlab_experiments::catalog::{table_query, Scenario, U_GRID};
use ruinlab_experiments::{
    reference_psi, reproduce_chains, reproduce_table, TableReport, Workbench,
    KNOWN_REFERENCE_DEVIATIONS, MARKOV_TOLERANCE, PINNED_TOLERANCE, PREMIUM_TOLERANCE,
    TABLE_TOLERANCE,
};

const PRINCIPLES: [Principle; 4] = [
    Principle::AggregateReported,
    Principle::AggregateSettled,
    Principle::ReportedCount,
    Principle::SettledCount,
];

/// All four tables over the full grid, computed once for the whole suite.
fn full_tables() -> &'static [TableReport; 4] {
    static TABLES: OnceLock<[TableReport; 4]> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut wb = Workbench::new(false);
        [1u8, 2, 3, 4].map(|t| wb.table(t).expect("table reproduction").clone())
    })
}

/// Small random finite-support instance: claim support within a 3x3 box,
/// threshold rules, delay probability from {0, 0.3, 1}, horizon at most 4.
fn small_instance(principle: Principle, seed: u64) -> RuinQuery {
    let mut rng = ChaCha12Rng::seed_from_u64(seed * 16 + principle as u64);

    let n_cells = rng.gen_range(2..=5);
    let mut support: Vec<(i64, i64)> = vec![(0, 0)];
    while support.len() < n_cells {
        let x = rng.gen_range(0..=3i64);
        let y = if x == 0 { 0 } else { rng.gen_range(0..=3i64) };
        if !support.contains(&(x, y)) {
            support.push((x, y));
        }
    }
    let weights: Vec<f64> = (0..support.len())
        .map(|_| rng.gen_range(1..=8) as f64)
        .collect();
    let total: f64 = weights.iter().sum();
    let cells: Vec<(i64, i64, f64)> = support
        .iter()
        .zip(&weights)
        .map(|(&(x, y), &w)| (x, y, w / total))
        .collect();
    let dist = JointClaimPmf::from_table(&cells, 1e-9).unwrap();

    let level_count = rng.gen_range(2..=4usize);
    let mut levels = Vec::with_capacity(level_count);
    let mut c = rng.gen_range(1..=3u32);
    for _ in 0..level_count {
        levels.push(c);
        c += rng.gen_range(1..=3u32);
    }
    let down = rng.gen_range(0..=3u64);
    let stay = rng.gen_range(down..=6u64);

    RuinQuery {
        principle,
        dist,
        q: [0.0, 0.3, 1.0][rng.gen_range(0..3)],
        scale: PremiumScale::new(&levels).unwrap(),
        rules: RuleSet::threshold(level_count, down, stay).unwrap(),
        u0: rng.gen_range(0..=6),
        initial_level: rng.gen_range(0..level_count),
        horizon: rng.gen_range(2..=4),
        emit_grid: false,
    }
}

// ---------------------------------------------------------------------------
// 1. Level-chain reproduction
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_level_chain_reproduction() {
    let start = Instant::now();
    let mut max_matrix = 0.0f64;
    let mut max_stationary = 0.0f64;
    let mut max_premium = 0.0f64;
    for table in [1u8, 3] {
        let reports = reproduce_chains(table).unwrap();
        assert_eq!(reports.len(), 3);
        for report in reports {
            max_matrix = max_matrix.max(report.max_matrix_err());
            max_stationary = max_stationary.max(report.max_stationary_err());
            max_premium = max_premium.max(report.premium_err());
            assert!(
                report.diff_lines().is_empty(),
                "chain diffs: {:?}",
                report.diff_lines()
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(max_matrix <= MARKOV_TOLERANCE);
    assert!(max_stationary <= MARKOV_TOLERANCE);
    assert!(max_premium <= PREMIUM_TOLERANCE);
    assert!(
        elapsed < Duration::from_secs(1),
        "chain reproduction took {elapsed:?}"
    );
    println!(
        "criterion 1: PASS — 6 transition matrices (max err {max_matrix:.2e}), \
         6 stationary vectors (max err {max_stationary:.2e}), \
         6 premiums (max err {max_premium:.4}) in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 2. Table regression
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_table_regression() {
    // The smoke subset must come in under two minutes.
    let smoke_start = Instant::now();
    for table in 1u8..=4 {
        let report = reproduce_table(table, true).unwrap();
        assert_eq!(report.cells.len(), 6);
        assert!(
            report.is_faithful(TABLE_TOLERANCE),
            "smoke diffs: {:?}",
            report.diff_lines(TABLE_TOLERANCE)
        );
    }
    let smoke_elapsed = smoke_start.elapsed();
    assert!(
        smoke_elapsed < Duration::from_secs(120),
        "smoke subset took {smoke_elapsed:?}"
    );

    // The full grid: every cell either matches its stored reference
    // within tolerance or is one of the pinned stored-reference
    // deviations sitting exactly on its adjudicated value.  Nothing is
    // loosened: a new deviation, or drift on a pinned cell, fails.
    let mut within = 0usize;
    let mut pinned = 0usize;
    let mut total = 0usize;
    let mut worst = 0.0f64;
    for report in full_tables() {
        for cell in &report.cells {
            total += 1;
            worst = worst.max(cell.abs_err());
            if cell.abs_err() <= TABLE_TOLERANCE {
                within += 1;
            } else {
                let dev = cell.pinned().unwrap_or_else(|| {
                    panic!(
                        "unexplained deviation: table {} {} u={} computed {:.9} vs {:.5}",
                        cell.table,
                        cell.scenario.label(),
                        cell.u,
                        cell.computed,
                        cell.expected
                    )
                });
                assert!(
                    (cell.computed - dev.recomputed).abs() <= PINNED_TOLERANCE,
                    "pinned cell drifted: table {} {} u={} computed {:.12} vs adjudicated {:.12}",
                    cell.table,
                    cell.scenario.label(),
                    cell.u,
                    cell.computed,
                    dev.recomputed
                );
                pinned += 1;
            }
        }
    }
    assert_eq!(total, 264);
    assert_eq!(pinned, KNOWN_REFERENCE_DEVIATIONS.len());

    // The literal gate ("all 264 cells within 2e-5") is unattainable for
    // a correct solver: the stored reference digits themselves are off on
    // the pinned cells (adjudicated by exhaustive-tail recomputation and
    // high-path simulation; see fixtures::KNOWN_REFERENCE_DEVIATIONS).
    println!(
        "criterion 2: FAIL as literally stated — {within} of {total} cells within {TABLE_TOLERANCE:.0e} \
         (max offset {worst:.2e}); the {pinned} remaining cells are known stored-reference deviations, \
         each matching its adjudicated value within {PINNED_TOLERANCE:.0e}; smoke subset in {smoke_elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 3. Enumeration oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_enumeration_oracle() {
    const TOL: f64 = 1e-12;
    const BUDGET: u64 = 100_000_000;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for principle in PRINCIPLES {
        for seed in 0..20u64 {
            let query = small_instance(principle, seed);
            let solved = ruin_probability(&query).unwrap();
            let walked = exact_enumerate(&query, BUDGET).unwrap();
            let err = (solved.value - walked).abs();
            worst = worst.max(err);
            assert!(
                err <= TOL,
                "{principle:?} seed {seed}: solver {} vs enumeration {walked}",
                solved.value
            );
            checked += 1;
        }
    }
    println!(
        "criterion 3: PASS — {checked} random finite-support instances \
         (20 per principle) match exhaustive enumeration, max err {worst:.2e}"
    );
}

// ---------------------------------------------------------------------------
// 4. Simulation consistency
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_simulation_consistency() {
    const N_PATHS: u64 = 1_000_000;
    let us = [0i64, 20, 50];
    let mut within = 0usize;
    let mut total = 0usize;
    let mut worst_z = 0.0f64;
    for report in full_tables() {
        for scenario in Scenario::ALL {
            for &u in &us {
                let solver = report
                    .cells
                    .iter()
                    .find(|c| c.scenario == scenario && c.u == u)
                    .expect("cell on the benchmark grid")
                    .computed;
                let query = table_query(report.table, scenario, u).unwrap();
                let seed = 7000 + 100 * u64::from(report.table) + 10 * u as u64
                    + scenario.label().bytes().map(u64::from).sum::<u64>() % 10;
                let mc = simulate(&query, N_PATHS, seed).unwrap();
                let z = (mc.p_hat - solver).abs() / mc.stderr.max(f64::MIN_POSITIVE);
                worst_z = worst_z.max(z);
                total += 1;
                if (mc.p_hat - solver).abs() <= 3.0 * mc.stderr {
                    within += 1;
                }
            }
        }
    }
    assert_eq!(total, 72);
    let needed = (0.95 * total as f64).ceil() as usize;
    assert!(
        within >= needed,
        "only {within} of {total} cells within 3 standard errors"
    );
    println!(
        "criterion 4: PASS — {within} of {total} seeded 1e6-path simulations \
         within 3 standard errors of the solver (need {needed}); worst z = {worst_z:.2}"
    );
}

// ---------------------------------------------------------------------------
// 5. Invariants
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_invariant_suite() {
    let mut checked = 0usize;
    for principle in PRINCIPLES {
        for seed in 100..110u64 {
            let query = small_instance(principle, seed);
            let result = ruin_probability(&query).unwrap();
            assert_eq!(result.truncation_bound, 0.0);
            let level = query.initial_level;

            // Range and monotonicity in surplus.
            let mut prev = 1.0f64;
            for u in 0..=query.u0 {
                let v = result.psi_at(level, u).unwrap();
                assert!((0.0..=1.0).contains(&v));
                assert!(v <= prev + 1e-12, "psi rose from {prev} to {v} at u={u}");
                prev = v;
            }

            // Monotonicity in the horizon.
            let mut longer = query.clone();
            longer.horizon += 1;
            let extended = ruin_probability(&longer).unwrap().value;
            assert!(result.value <= extended + 1e-12);

            // Pending by-claims: monotone in z, and a pure surplus shift,
            // for the principles that never revisit the pending claim.
            // The shift identity holds for z <= u; past that the shifted
            // start would count as ruined at time zero while the pending
            // claim only falls due after the first premium arrives.
            if !query.principle.is_settled() {
                let mut prev = result.psi_at(level, query.u0).unwrap();
                for z in 0..=query.u0.min(4) {
                    let aux = result.psi_prime_at(level, query.u0, z).unwrap();
                    let shift = result.psi_at(level, query.u0 - z).unwrap();
                    assert!((aux - shift).abs() <= 1e-12);
                    assert!(aux + 1e-12 >= prev);
                    prev = aux;
                }
            }

            // Without delays the settled statistics equal the reported
            // ones, so the principle pairs coincide.
            let mut reported = query.clone();
            reported.q = 0.0;
            reported.principle = if query.principle.is_count() {
                Principle::ReportedCount
            } else {
                Principle::AggregateReported
            };
            let mut settled = reported.clone();
            settled.principle = if query.principle.is_count() {
                Principle::SettledCount
            } else {
                Principle::AggregateSettled
            };
            let a = ruin_probability(&reported).unwrap().value;
            let b = ruin_probability(&settled).unwrap().value;
            assert!((a - b).abs() <= 1e-10);

            checked += 1;
        }
    }
    println!(
        "criterion 5: PASS — range, surplus/horizon monotonicity, pending-claim \
         shift identity, and no-delay equivalence on {checked} instances \
         (the full randomized property suite lives in the solver crate's tests)"
    );
}

// ---------------------------------------------------------------------------
// 6. Qualitative orderings
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_qualitative_orderings() {
    const SLACK: f64 = 1e-12;
    let tables = full_tables();
    let cell = |table: u8, scenario: Scenario, u: i64| -> f64 {
        tables[usize::from(table) - 1]
            .cells
            .iter()
            .find(|c| c.scenario == scenario && c.u == u)
            .expect("cell on the benchmark grid")
            .computed
    };

    let mut comparisons = 0usize;
    for table in 1u8..=4 {
        for u in U_GRID {
            // Rare delays keep more claims in the current period, so ruin
            // is likelier at q = 0.2 than at q = 0.8.
            for pair in [("H1", "H2"), ("M1", "M2"), ("L1", "L2")] {
                let rare = cell(table, Scenario::parse(pair.0).unwrap(), u);
                let frequent = cell(table, Scenario::parse(pair.1).unwrap(), u);
                assert!(
                    frequent <= rare + SLACK,
                    "table {table} u={u}: {} = {frequent} > {} = {rare}",
                    pair.1,
                    pair.0
                );
                comparisons += 1;
            }
            // Stronger coupling between main and by-claims means heavier
            // aggregate tails: H above M above L.
            for pair in [("H1", "M1"), ("M1", "L1"), ("H2", "M2"), ("M2", "L2")] {
                let stronger = cell(table, Scenario::parse(pair.0).unwrap(), u);
                let weaker = cell(table, Scenario::parse(pair.1).unwrap(), u);
                assert!(
                    weaker <= stronger + SLACK,
                    "table {table} u={u}: {} = {weaker} > {} = {stronger}",
                    pair.1,
                    pair.0
                );
                comparisons += 1;
            }
        }
    }
    // Settled triggers react to the delayed claim a period late; at the
    // benchmark settings that lag raises ruin probabilities almost
    // everywhere — but not pointwise.  Under frequent delays with
    // perfectly coupled claims (H2) the aggregate-principle curves
    // cross, and the settled chain is mildly safer from u = 30 on.  The
    // stored reference tables reverse at exactly the same cells, so the
    // exceptions are benchmark facts, not solver artifacts; they are
    // pinned here and any drift — a new reversal, or a pinned one
    // straightening out — fails.
    const SETTLED_ORDER_EXCEPTIONS: [(u8, &str, i64); 8] = [
        (2, "H2", 30),
        (2, "H2", 40),
        (2, "H2", 50),
        (2, "H2", 60),
        (2, "H2", 70),
        (2, "H2", 80),
        (2, "H2", 90),
        (2, "H2", 100),
    ];
    let mut held = 0usize;
    let mut excepted = 0usize;
    let mut largest_gap = 0.0f64;
    for (reported, settled) in [(1u8, 2u8), (3, 4)] {
        for scenario in Scenario::ALL {
            for u in U_GRID {
                let r = cell(reported, scenario, u);
                let s = cell(settled, scenario, u);
                let label = scenario.label();
                let pinned = SETTLED_ORDER_EXCEPTIONS
                    .iter()
                    .any(|&(t, l, eu)| t == settled && label == l && eu == u);
                if pinned {
                    assert!(
                        s < r,
                        "{label} u={u}: pinned ordering exception no longer reverses"
                    );
                    let ref_r = reference_psi(reported, scenario, u).unwrap();
                    let ref_s = reference_psi(settled, scenario, u).unwrap();
                    assert!(
                        ref_s < ref_r,
                        "{label} u={u}: stored reference does not show the reversal"
                    );
                    largest_gap = largest_gap.max(r - s);
                    excepted += 1;
                } else {
                    assert!(
                        s + SLACK >= r,
                        "{label} u={u}: settled table {settled} = {s} \
                         < reported table {reported} = {r}"
                    );
                    held += 1;
                }
            }
        }
    }
    println!(
        "criterion 6: FAIL as literally stated — delay and correlation orderings hold \
         pointwise ({comparisons} comparisons), but settled >= reported holds in only \
         {held} of {} cells: {excepted} aggregate-principle cells at H2, u >= 30 \
         reverse (largest gap {largest_gap:.1e}), and the stored reference tables \
         reverse at exactly those cells",
        held + excepted
    );
}
