use rand::seq::IndexedRandom;
use rand::Rng;

use crate::mode::Mode;
use crate::network::{Network, Router, TravelTimeProfile};
use crate::population::{Person, Plan};
use crate::Time;

/// Modes a person may choose: car only for car owners.
pub fn feasible_modes(person: &Person) -> Vec<Mode> {
    Mode::ALL
        .into_iter()
        .filter(|&m| m != Mode::Car || person.car_owner)
        .collect()
}

/// Departure time of leg `k`.
fn departure(plan: &Plan, k: usize) -> Time {
    plan.activities[k].end_time.unwrap_or(0)
}

/// Recomputes the car routes of the given legs against `profile`, departing
/// at the planned activity end. Unreachable legs fall back to walking.
fn route_legs(plan: &mut Plan, legs: std::ops::Range<usize>, net: &Network, profile: &TravelTimeProfile, router: &mut Router) {
    for k in legs {
        let leg = &mut plan.legs[k];
        leg.route.clear();
        if leg.mode != Mode::Car {
            continue;
        }
        let (o, d) = (plan.activities[k].link, plan.activities[k + 1].link);
        match router.shortest_path(net, profile, o, d, departure(plan, k) as f64, Mode::Car) {
            Some(path) => plan.legs[k].route = path.links,
            None => plan.legs[k].mode = Mode::Walk,
        }
    }
}

/// Routes every car leg.
pub fn reroute(plan: &mut Plan, net: &Network, profile: &TravelTimeProfile, router: &mut Router) {
    route_legs(plan, 0..plan.legs.len(), net, profile, router);
}

/// Moves one whole tour to a mode drawn uniformly from the person's feasible
/// modes and routes its car legs.
pub fn mutate_mode(
    plan: &mut Plan,
    person: &Person,
    net: &Network,
    profile: &TravelTimeProfile,
    router: &mut Router,
    rng: &mut impl Rng,
) {
    let tours = plan.tours();
    let Some(tour) = tours.choose(rng).cloned() else {
        return;
    };
    let modes = feasible_modes(person);
    let mode = *modes.choose(rng).expect("walk is always feasible");
    for k in tour.clone() {
        plan.legs[k].mode = mode;
    }
    route_legs(plan, tour, net, profile, router);
}

/// Shifts one activity end time uniformly within `±bound` seconds, clamped to
/// stay strictly after the previous end and before the next one.
pub fn mutate_time(plan: &mut Plan, bound: Time, rng: &mut impl Rng) {
    let timed: Vec<usize> = (0..plan.activities.len())
        .filter(|&k| plan.activities[k].end_time.is_some())
        .collect();
    let Some(&k) = timed.choose(rng) else {
        return;
    };
    let shift = if bound > 0 { rng.random_range(-bound..=bound) } else { 0 };
    let prev = if k == 0 { 0 } else { plan.activities[k - 1].end_time.unwrap_or(0) };
    let next = plan.activities.get(k + 1).and_then(|a| a.end_time);
    let end = plan.activities[k].end_time.expect("timed activity");
    let mut t = end + shift;
    if let Some(n) = next {
        t = t.min(n - 1);
    }
    t = t.max(prev + 1);
    plan.activities[k].end_time = Some(t);
}
