//! Shared autonomous vehicle fleet: requests, schedules, insertion dispatch
//! and idle-vehicle rebalancing.

pub mod insertion;
pub mod mcmf;
pub mod rebalance;
pub mod request;
pub mod schedule;

pub use insertion::{
    apply_insertion, evaluate_insertion, find_best_insertion, ApplyError, DispatchParams, Insertion,
    InsertionContext,
};
pub use rebalance::{rebalance, transport_plan, DemandEstimate, RebalanceParams, Zoning};
pub use request::{IllegalTransition, Request, RequestStatus};
pub use schedule::{Route, SavVehicle, Stop, Task};

use crate::network::LinkIdx;
use crate::Time;

/// Spreads `size` vehicles over the depots as evenly as possible, earlier
/// depots taking the remainder.
pub fn seed_fleet(size: u32, capacity: u32, depots: &[LinkIdx], now: Time) -> Vec<SavVehicle> {
    assert!(!depots.is_empty() || size == 0, "fleet needs at least one depot");
    let per = size as usize / depots.len().max(1);
    let extra = size as usize % depots.len().max(1);
    let mut out = Vec::with_capacity(size as usize);
    for (d, &depot) in depots.iter().enumerate() {
        let count = per + usize::from(d < extra);
        for _ in 0..count {
            out.push(SavVehicle::new(out.len() as u32, capacity, depot, now));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_vehicles_over_four_depots() {
        let depots: Vec<_> = (0..4).map(LinkIdx).collect();
        let fleet = seed_fleet(10, 4, &depots, 0);
        let counts: Vec<usize> = depots
            .iter()
            .map(|&d| fleet.iter().filter(|v| v.depot == d).count())
            .collect();
        assert_eq!(counts, vec![3, 3, 2, 2]);
        assert!(fleet.iter().enumerate().all(|(k, v)| v.id == k as u32 && v.capacity == 4));
    }
}
