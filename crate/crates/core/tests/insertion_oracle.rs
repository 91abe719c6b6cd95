//! Insertion dispatch against exhaustive enumeration.

#[path = "oracle/insertion.rs"]
mod oracle;

use oracle::Outcome;

#[test]
fn dispatcher_matches_exhaustive_enumeration() {
    let outcomes: Vec<Outcome> = (0..1500u64).map(oracle::check).collect();
    let feasible = outcomes.iter().filter(|o| **o != Outcome::Infeasible).count();
    let shared = outcomes.iter().filter(|o| **o == Outcome::Shared).count();
    assert!(feasible > 500, "only {feasible} feasible instances");
    assert!(shared > 100, "only {shared} shared insertions");
}
