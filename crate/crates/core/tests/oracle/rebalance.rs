//! Brute-force oracle for rebalancing transport plans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use savsim::network::{grid_city, GridSpec};
use savsim::savfleet::{transport_plan, Zoning};

/// Minimum cost over all plans moving exactly `total` units.
pub fn brute_force(supply: &[u32], deficit: &[u32], cost: &[Vec<i64>], total: u32) -> i64 {
    fn go(
        s: usize,
        d: usize,
        supply: &mut [u32],
        deficit: &mut [u32],
        cost: &[Vec<i64>],
        left: u32,
        acc: i64,
        best: &mut i64,
    ) {
        if left == 0 {
            *best = (*best).min(acc);
            return;
        }
        if s == supply.len() {
            return;
        }
        if d == deficit.len() {
            go(s + 1, 0, supply, deficit, cost, left, acc, best);
            return;
        }
        let max = supply[s].min(deficit[d]).min(left);
        for f in 0..=max {
            supply[s] -= f;
            deficit[d] -= f;
            go(s, d + 1, supply, deficit, cost, left - f, acc + f as i64 * cost[s][d], best);
            supply[s] += f;
            deficit[d] += f;
        }
    }
    let mut best = i64::MAX;
    go(0, 0, &mut supply.to_vec(), &mut deficit.to_vec(), cost, total, 0, &mut best);
    best
}

/// Checks bounds, moved volume and optimality of the solver's plan. Panics on any violation.
pub fn check_plan(supply: &[u32], deficit: &[u32], cost: &[Vec<i64>], plan: &[Vec<u32>], label: &str) {
    let total = supply.iter().sum::<u32>().min(deficit.iter().sum());
    for (s, row) in plan.iter().enumerate() {
        assert!(row.iter().sum::<u32>() <= supply[s], "{label}");
    }
    for d in 0..deficit.len() {
        assert!(plan.iter().map(|r| r[d]).sum::<u32>() <= deficit[d], "{label}");
    }
    let moved: u32 = plan.iter().flatten().sum();
    assert_eq!(moved, total, "{label}");
    let got: i64 = (0..supply.len())
        .flat_map(|s| (0..deficit.len()).map(move |d| (s, d)))
        .map(|(s, d)| plan[s][d] as i64 * cost[s][d])
        .sum();
    assert_eq!(got, brute_force(supply, deficit, cost, total), "{label}");
}

/// Random supply and deficit cells on an n x n zoning of a grid city,
/// n in 2..=5, solved with the zoning's costs.
pub fn check_grid(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=5u32);
    let spacing = 500.0;
    let net = grid_city(&GridSpec {
        size: n,
        spacing_m: spacing,
        ..GridSpec::default()
    });
    let zoning = Zoning::new(&net, spacing);
    let cells = (n * n) as usize;
    assert_eq!(zoning.num_cells(), cells);
    let mut order: Vec<usize> = (0..cells).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let ns = rng.random_range(1..=3usize.min(cells - 1));
    let nd = rng.random_range(1..=3usize.min(cells - ns));
    let (src, dst) = (&order[..ns], &order[ns..ns + nd]);
    let supply: Vec<u32> = src.iter().map(|_| rng.random_range(0..=3)).collect();
    let deficit: Vec<u32> = dst.iter().map(|_| rng.random_range(0..=3)).collect();
    // cell (c, r) of an n x n grid with 500 m spacing has its centroid at ((c + 0.5) * 500, (r + 0.5) * 500)
    let cost: Vec<Vec<i64>> = src
        .iter()
        .map(|&a| {
            dst.iter()
                .map(|&b| {
                    let dx = (a % n as usize) as f64 - (b % n as usize) as f64;
                    let dy = (a / n as usize) as f64 - (b / n as usize) as f64;
                    (dx.hypot(dy) * spacing).round() as i64
                })
                .collect()
        })
        .collect();
    let plan = transport_plan(&supply, &deficit, |s, d| zoning.cost(src[s], dst[d]));
    check_plan(&supply, &deficit, &cost, &plan, &format!("grid seed {seed}"));
}
