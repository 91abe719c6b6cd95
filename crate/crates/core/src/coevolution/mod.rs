//! Co-evolutionary plan improvement: execute a day, score the executed
//! plans, then let every agent either pick a memorized plan or try a mutated
//! copy. Innovation stops after a configurable share of the iterations so the
//! final iterations only choose among known plans.

mod memory;
mod strategies;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::mobsim::{run_day, DayOutput, FleetSetup, MobsimParams, PersonDay};
use crate::mode::Mode;
use crate::network::{update_travel_times, LinkIdx, Network, Router, TravelTimeProfile};
use crate::population::{Person, Plan, ZoneMap};
use crate::savfleet::{seed_fleet, DemandEstimate, DispatchParams, RebalanceParams, Request, Zoning};
use crate::scoring::{FareVariant, LegExperience, PlanExperience, ScoringParams};
use crate::Time;

pub use memory::{select_plan, PlanMemory};
pub use strategies::{feasible_modes, mutate_mode, mutate_time, reroute};

/// Strategy probabilities per agent and iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyWeights {
    pub reroute: f64,
    pub mode_mutation: f64,
    pub time_mutation: f64,
    pub select_only: f64,
    /// Share of the iterations after which only selection remains.
    pub innovation_cutoff: f64,
}

impl Default for StrategyWeights {
    fn default() -> Self {
        StrategyWeights {
            reroute: 0.05,
            mode_mutation: 0.10,
            time_mutation: 0.05,
            select_only: 0.80,
            innovation_cutoff: 0.8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Reroute,
    ModeMutation,
    TimeMutation,
    SelectOnly,
}

impl StrategyWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.reroute, self.mode_mutation, self.time_mutation, self.select_only];
        if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("replanning weights must be non-negative and sum to 1".into()));
        }
        if !(0.0..=1.0).contains(&self.innovation_cutoff) {
            return Err(Error::Config("innovation_cutoff must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Whether iteration `it` of `total` may still innovate.
    pub fn innovating(&self, it: usize, total: usize) -> bool {
        (it as f64) < self.innovation_cutoff * total as f64
    }

    pub fn draw(&self, innovating: bool, rng: &mut impl Rng) -> Strategy {
        if !innovating {
            return Strategy::SelectOnly;
        }
        let u: f64 = rng.random();
        if u < self.reroute {
            Strategy::Reroute
        } else if u < self.reroute + self.mode_mutation {
            Strategy::ModeMutation
        } else if u < self.reroute + self.mode_mutation + self.time_mutation {
            Strategy::TimeMutation
        } else {
            Strategy::SelectOnly
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplanningParams {
    pub memory_size: usize,
    pub weights: StrategyWeights,
    /// Scale of the logit plan choice.
    pub logit_scale: f64,
    pub time_mutation_range: Time,
    /// Width of the travel-time bins fed back to routing and dispatch.
    pub time_bin_s: f64,
}

impl Default for ReplanningParams {
    fn default() -> Self {
        ReplanningParams {
            memory_size: 5,
            weights: StrategyWeights::default(),
            logit_scale: 1.0,
            time_mutation_range: 600,
            time_bin_s: 900.0,
        }
    }
}

/// Fleet and service settings for a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FleetSpec {
    pub size: u32,
    pub capacity: u32,
    pub depots: Vec<LinkIdx>,
    pub ridesharing: bool,
    pub dispatch: DispatchParams,
    pub rebalance: RebalanceParams,
}

/// Everything an equilibrium run reads.
pub struct Equilibrium<'a> {
    pub net: &'a Network,
    pub persons: &'a [Person],
    pub zones: &'a ZoneMap,
    pub scoring: &'a ScoringParams,
    pub mobsim: &'a MobsimParams,
    pub replanning: &'a ReplanningParams,
    pub fleet: &'a FleetSpec,
    pub iterations: usize,
    pub seed: u64,
}

/// Per-iteration summary for the iteration log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_executed_score: f64,
    /// Leg shares in percent, in [`Mode::ALL`] order.
    pub mode_shares: [f64; 4],
    pub sav_requests: usize,
    pub sav_rejected: usize,
    pub sav_mean_wait_s: f64,
    pub stuck: usize,
}

pub struct EquilibriumResult {
    pub memories: Vec<PlanMemory>,
    pub log: Vec<IterationStats>,
    /// The last iteration's day.
    pub day: DayOutput,
    /// Car travel times observed in the last iteration.
    pub profile: TravelTimeProfile,
}

impl EquilibriumResult {
    pub fn scores(&self) -> Vec<f64> {
        self.log.iter().map(|s| s.mean_executed_score).collect()
    }
}

/// Relative spread `(max - min) / |mean|` of the last `share` of the values.
pub fn convergence_stat(scores: &[f64], share: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let n = ((scores.len() as f64 * share).ceil() as usize).clamp(1, scores.len());
    let tail = &scores[scores.len() - n..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = tail.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return if max == min { 0.0 } else { f64::INFINITY };
    }
    (max - min) / mean.abs()
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    (0..values.len())
        .map(|k| {
            let from = (k + 1).saturating_sub(w);
            values[from..=k].iter().sum::<f64>() / (k + 1 - from) as f64
        })
        .collect()
}

/// Largest relative drop of the moving average below an earlier value
/// within the final half; a nondecreasing series gives 0.
pub fn final_half_drop(scores: &[f64], window: usize) -> f64 {
    let ma = moving_average(scores, window);
    let tail = &ma[ma.len() / 2..];
    let mut worst = 0.0f64;
    let mut peak = f64::NEG_INFINITY;
    for &x in tail {
        if peak.is_finite() && x < peak {
            worst = worst.max((peak - x) / peak.abs().max(f64::MIN_POSITIVE));
        }
        peak = peak.max(x);
    }
    worst
}

/// Turns an executed day into the scoring input for one plan.
pub fn experience(
    plan: &Plan,
    day: &PersonDay,
    requests: &[Request],
    zones: &ZoneMap,
    scoring: &ScoringParams,
    fleet: &FleetSpec,
) -> PlanExperience {
    if day.stuck {
        return PlanExperience {
            stuck: true,
            ..PlanExperience::default()
        };
    }
    let n = plan.activities.len();
    let mut activities = Vec::with_capacity(n);
    let dur = |k: usize| -> f64 {
        match (day.act_start[k], day.act_end[k]) {
            (Some(s), Some(e)) => (e - s).max(0) as f64,
            _ => 0.0,
        }
    };
    if n == 1 {
        activities.push((plan.activities[0].kind, 86_400.0));
    } else {
        let first_end = day.act_end[0].unwrap_or(0) as f64;
        let last_start = day.act_start[n - 1].unwrap_or(86_400) as f64;
        if plan.activities[0].kind == plan.activities[n - 1].kind {
            activities.push((
                plan.activities[0].kind,
                crate::scoring::overnight_duration(first_end, last_start),
            ));
        } else {
            activities.push((plan.activities[0].kind, first_end.max(0.0)));
            activities.push((plan.activities[n - 1].kind, (86_400.0 - last_start).max(0.0)));
        }
        for k in 1..n - 1 {
            activities.push((plan.activities[k].kind, dur(k)));
        }
    }
    let mut legs = Vec::with_capacity(day.legs.len());
    let mut rejected = 0;
    let fares = &scoring.fares;
    for (k, rec) in day.legs.iter().enumerate() {
        let mut x = LegExperience::new(rec.mode);
        let travel = rec.arrive.map_or(0, |a| a - rec.depart).max(0) as f64;
        let km = rec.distance / 1000.0;
        match rec.mode {
            Mode::Walk => x.in_vehicle_s = travel,
            Mode::Pt => {
                x.in_vehicle_s = travel;
                x.cost = fares.fare(FareVariant::Pt, km);
            }
            Mode::Car => {
                x.in_vehicle_s = travel;
                x.cost = fares.fare(FareVariant::Car, km);
                x.dest_zone = Some(zones.zone_of(plan.activities[k + 1].link));
            }
            Mode::Sav => {
                let r = &requests[rec.request.expect("sav leg has a request") as usize];
                let pickup = r.pickup_time.unwrap_or(r.submit_time);
                let dropoff = r.dropoff_time.unwrap_or(pickup);
                x.wait_s = (pickup - r.submit_time).max(0) as f64;
                x.in_vehicle_s = (dropoff - pickup).max(0) as f64;
                let cap = fleet.dispatch.detour_factor * r.direct_time as f64;
                x.detour_excess_s = (x.in_vehicle_s - cap).max(0.0);
                let variant = if fleet.ridesharing {
                    FareVariant::SavShared
                } else {
                    FareVariant::SavIndividual
                };
                x.cost = fares.fare(variant, r.direct_distance / 1000.0);
            }
        }
        if rec.rejected() {
            rejected += 1;
        }
        legs.push(x);
    }
    PlanExperience {
        activities,
        legs,
        rejected_requests: rejected,
        stuck: false,
    }
}

fn iteration_stats(it: usize, scores: &[f64], day: &DayOutput) -> IterationStats {
    let mut counts = [0usize; 4];
    for e in &day.events {
        if e.kind == EventKind::Depart {
            if let crate::events::Attrs::Mode(m) = e.attrs {
                counts[m.index()] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    let shares = counts.map(|c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 });
    let served: Vec<&Request> = day.requests.iter().filter(|r| r.pickup_time.is_some()).collect();
    let wait = if served.is_empty() {
        0.0
    } else {
        served
            .iter()
            .map(|r| (r.pickup_time.unwrap() - r.submit_time) as f64)
            .sum::<f64>()
            / served.len() as f64
    };
    IterationStats {
        iteration: it,
        mean_executed_score: if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        },
        mode_shares: shares,
        sav_requests: day.requests.len(),
        sav_rejected: day
            .requests
            .iter()
            .filter(|r| r.status == crate::savfleet::RequestStatus::Rejected)
            .count(),
        sav_mean_wait_s: wait,
        stuck: day.persons.iter().filter(|p| p.stuck).count(),
    }
}

fn submissions(events: &[Event]) -> impl Iterator<Item = (Time, LinkIdx)> + '_ {
    events
        .iter()
        .filter(|e| e.kind == EventKind::RequestSubmitted)
        .filter_map(|e| e.link.map(|l| (e.time, l)))
}

const REPLAN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Runs the execute-score-replan loop for `eq.iterations` iterations and
/// returns the final memories, the iteration log and the last day.
pub fn run_equilibrium(eq: &Equilibrium, initial: Vec<Plan>) -> Result<EquilibriumResult> {
    if initial.len() != eq.persons.len() {
        return Err(Error::Config(format!(
            "{} plans for {} persons",
            initial.len(),
            eq.persons.len()
        )));
    }
    if eq.iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    eq.replanning.weights.validate()?;
    eq.scoring.validate()?;
    let (net, rp) = (eq.net, eq.replanning);
    let horizon = eq.mobsim.horizon as f64;
    let mut profile = TravelTimeProfile::free_flow(net, rp.time_bin_s, horizon);
    let zoning = Zoning::new(net, eq.fleet.rebalance.cell_size_m);

    let mut memories: Vec<PlanMemory> = {
        let mut router = Router::new(net);
        initial
            .into_iter()
            .map(|mut p| {
                reroute(&mut p, net, &profile, &mut router);
                PlanMemory::new(p, rp.memory_size.max(1))
            })
            .collect()
    };

    let mut log = Vec::with_capacity(eq.iterations);
    let mut demand: Option<DemandEstimate> = None;
    let mut last_day = None;
    for it in 0..eq.iterations {
        let plans: Vec<&Plan> = memories.iter().map(PlanMemory::selected).collect();
        let vehicles = seed_fleet(eq.fleet.size, eq.fleet.capacity, &eq.fleet.depots, 0);
        let setup = FleetSetup {
            vehicles,
            dispatch: &eq.fleet.dispatch,
            ridesharing: eq.fleet.ridesharing,
            rebalance: &eq.fleet.rebalance,
            zoning: &zoning,
            demand: demand.as_ref(),
        };
        let day = run_day(net, &plans, setup, &profile, eq.mobsim)?;

        let scores: Vec<f64> = memories
            .par_iter_mut()
            .enumerate()
            .map(|(p, m)| {
                let exp = experience(m.selected(), &day.persons[p], &day.requests, eq.zones, eq.scoring, eq.fleet);
                let s = eq.scoring.score_plan(&eq.persons[p], &exp)?;
                m.selected_mut().score = Some(s);
                Ok(s)
            })
            .collect::<Result<_>>()?;
        let stats = iteration_stats(it, &scores, &day);
        log::info!(
            "iteration {it}: score {:.4}, sav share {:.2}%, {} requests, {} rejected, wait {:.0} s, {} stuck",
            stats.mean_executed_score,
            stats.mode_shares[Mode::Sav.index()],
            stats.sav_requests,
            stats.sav_rejected,
            stats.sav_mean_wait_s,
            stats.stuck
        );
        log.push(stats);

        if it + 1 == eq.iterations {
            last_day = Some(day);
            break;
        }
        profile = update_travel_times(net, &day.events, rp.time_bin_s, horizon)?;
        demand = Some(DemandEstimate::from_submissions(&zoning, submissions(&day.events)));

        let innovating = rp.weights.innovating(it + 1, eq.iterations);
        let stream_base = (it as u64 + 1) << 32;
        memories.par_iter_mut().enumerate().for_each_init(
            || Router::new(net),
            |router, (p, m)| {
                let mut rng = ChaCha8Rng::seed_from_u64(eq.seed ^ REPLAN_SALT);
                rng.set_stream(stream_base | p as u64);
                match rp.weights.draw(innovating, &mut rng) {
                    Strategy::SelectOnly => {
                        let k = select_plan(m, rp.logit_scale, &mut rng);
                        m.select(k);
                    }
                    s => {
                        let mut plan = m.selected().clone();
                        plan.score = None;
                        match s {
                            Strategy::Reroute => reroute(&mut plan, net, &profile, router),
                            Strategy::ModeMutation => {
                                mutate_mode(&mut plan, &eq.persons[p], net, &profile, router, &mut rng)
                            }
                            Strategy::TimeMutation => mutate_time(&mut plan, rp.time_mutation_range, &mut rng),
                            Strategy::SelectOnly => unreachable!(),
                        }
                        m.add(plan);
                    }
                }
            },
        );
    }

    Ok(EquilibriumResult {
        memories,
        log,
        day: last_day.expect("at least one iteration"),
        profile,
    })
}

/// Iteration log CSV: iteration, mean executed score, mode shares, SAV snapshot.
pub fn write_iteration_log<W: Write>(mut w: W, log: &[IterationStats]) -> std::io::Result<()> {
    writeln!(
        w,
        "iteration,mean_executed_score,share_car,share_pt,share_walk,share_sav,sav_requests,sav_rejected,sav_mean_wait_s,stuck"
    )?;
    for s in log {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            s.iteration,
            s.mean_executed_score,
            s.mode_shares[0],
            s.mode_shares[1],
            s.mode_shares[2],
            s.mode_shares[3],
            s.sav_requests,
            s.sav_rejected,
            s.sav_mean_wait_s,
            s.stuck
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_of_flat_tail_is_zero() {
        let mut s: Vec<f64> = (0..90).map(|k| k as f64).collect();
        s.extend(std::iter::repeat_n(100.0, 10));
        assert_eq!(convergence_stat(&s, 0.1), 0.0);
        assert!((convergence_stat(&[99.0, 101.0], 1.0) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn drop_detects_a_dip() {
        let rising: Vec<f64> = (0..40).map(|k| 100.0 + k as f64).collect();
        assert_eq!(final_half_drop(&rising, 10), 0.0);
        let mut dip = vec![100.0; 40];
        dip[30] = 50.0;
        assert!(final_half_drop(&dip, 1) > 0.49);
    }

    #[test]
    fn weights_switch_off_innovation() {
        let w = StrategyWeights::default();
        assert!(w.innovating(79, 100));
        assert!(!w.innovating(80, 100));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| w.draw(false, &mut rng) == Strategy::SelectOnly));
    }
}
