//! Rebalancing transport plans against exhaustive enumeration of integral plans.

#[path = "oracle/rebalance.rs"]
mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use savsim::savfleet::transport_plan;

#[test]
fn transport_plan_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..600 {
        let ns = rng.random_range(1..=3);
        let nd = rng.random_range(1..=3);
        let supply: Vec<u32> = (0..ns).map(|_| rng.random_range(0..=3)).collect();
        let deficit: Vec<u32> = (0..nd).map(|_| rng.random_range(0..=3)).collect();
        let cost: Vec<Vec<i64>> = (0..ns)
            .map(|_| (0..nd).map(|_| rng.random_range(0..=5000)).collect())
            .collect();
        let plan = transport_plan(&supply, &deficit, |s, d| cost[s][d]);
        oracle::check_plan(&supply, &deficit, &cost, &plan, &format!("case {case}"));
    }
}

#[test]
fn grid_zoning_plans_are_optimal() {
    for seed in 0..300 {
        oracle::check_grid(seed);
    }
}
