//! Shared helpers for the integration tests: a deterministic generator of
//! small random finite-support instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use ruinlab_core::bonus_malus::{Principle, RuleBand, RuleSet};
use ruinlab_core::claims::JointClaimPmf;
use ruinlab_core::ruin_engine::RuinQuery;
use ruinlab_core::PremiumScale;

/// Deterministic random instance: small finite support (with the no-claim
/// outcome always present), 2-4 levels, threshold or banded rules, delay
/// probability from {0, 0.3, 0.7, 1}, horizon 2-4.
pub fn random_instance(principle: Principle, seed: u64) -> RuinQuery {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(8) + principle as u64);

    let n_cells = rng.gen_range(2..=5);
    let mut support: Vec<(i64, i64)> = vec![(0, 0)];
    while support.len() < n_cells {
        let x = rng.gen_range(0..=4i64);
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
    let scale = PremiumScale::new(&levels).unwrap();

    let rules = if rng.gen_bool(0.5) {
        let down = rng.gen_range(0..=3u64);
        let stay = rng.gen_range(down..=6u64);
        RuleSet::threshold(level_count, down, stay).unwrap()
    } else {
        let a = rng.gen_range(0..=2u64);
        let b = rng.gen_range(a + 1..=5u64);
        let bands = (0..level_count)
            .map(|_| {
                vec![
                    RuleBand {
                        lo: 0,
                        hi: Some(a),
                        dest: rng.gen_range(0..level_count),
                    },
                    RuleBand {
                        lo: a + 1,
                        hi: Some(b),
                        dest: rng.gen_range(0..level_count),
                    },
                    RuleBand {
                        lo: b + 1,
                        hi: None,
                        dest: rng.gen_range(0..level_count),
                    },
                ]
            })
            .collect();
        RuleSet::from_bands(level_count, bands).unwrap()
    };

    RuinQuery {
        principle,
        dist,
        q: [0.0, 0.3, 0.7, 1.0][rng.gen_range(0..4)],
        scale,
        rules,
        u0: rng.gen_range(0..=6),
        initial_level: rng.gen_range(0..level_count),
        horizon: rng.gen_range(2..=4),
        emit_grid: false,
    }
}
