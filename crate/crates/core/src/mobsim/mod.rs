//! Within-day simulation of one day of plans.
//!
//! Private cars move through per-link FIFO queues with free-flow minimum
//! times, outflow capacity and storage blocking. Walk and transit legs are
//! teleported. Fleet vehicles follow the schedules the dispatcher commits and
//! are offered every SAV request the moment it is submitted.
//!
//! Each simulated second runs four phases in a fixed order: fleet task
//! transitions, the agent agenda (activity ends, teleport arrivals, request
//! submission), car queues, then rebalancing on its interval. Idle seconds
//! are skipped.

mod fleet;
mod queue;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Attrs, Event, EventKind, VehicleRef};
use crate::mode::Mode;
use crate::network::{LinkIdx, Network, Skim, TravelTimeProfile};
use crate::population::{Plan, PopulationError};
use crate::savfleet::{
    find_best_insertion, rebalance, DemandEstimate, DispatchParams, InsertionContext, RebalanceParams, Request,
    SavVehicle, Zoning,
};
use crate::Time;

use fleet::FleetSim;
use queue::Traffic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeleportParams {
    pub beeline_factor: f64,
    pub walk_speed_ms: f64,
    pub pt_speed_ms: f64,
    pub pt_wait_s: Time,
}

impl Default for TeleportParams {
    fn default() -> Self {
        TeleportParams {
            beeline_factor: 1.3,
            walk_speed_ms: 1.34,
            pt_speed_ms: 6.7,
            pt_wait_s: 300,
        }
    }
}

impl TeleportParams {
    /// Routed distance of a teleported leg.
    pub fn distance(&self, beeline_m: f64) -> f64 {
        beeline_m * self.beeline_factor
    }

    /// Arrival time of a walk or transit leg; `None` for network modes.
    pub fn arrival(&self, mode: Mode, beeline_m: f64, depart: Time) -> Option<Time> {
        let d = self.distance(beeline_m);
        let travel = match mode {
            Mode::Walk => d / self.walk_speed_ms,
            Mode::Pt => d / self.pt_speed_ms + self.pt_wait_s as f64,
            Mode::Car | Mode::Sav => return None,
        };
        Some(depart + travel.round() as Time)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobsimParams {
    /// Agents still underway at this time are recorded as stuck.
    pub horizon: Time,
    /// Population sample rate; scales link flow and storage capacities.
    pub sample_rate: f64,
    pub teleport: TeleportParams,
}

impl Default for MobsimParams {
    fn default() -> Self {
        MobsimParams {
            horizon: 48 * 3600,
            sample_rate: 1.0,
            teleport: TeleportParams::default(),
        }
    }
}

/// The fleet and the services it offers for one day.
pub struct FleetSetup<'a> {
    pub vehicles: Vec<SavVehicle>,
    pub dispatch: &'a DispatchParams,
    pub ridesharing: bool,
    pub rebalance: &'a RebalanceParams,
    pub zoning: &'a Zoning,
    /// Expected submissions per cell; rebalancing is off without one.
    pub demand: Option<&'a DemandEstimate>,
}

/// Executed leg.
#[derive(Clone, Debug, PartialEq)]
pub struct LegRecord {
    /// Mode in the plan.
    pub planned: Mode,
    /// Mode actually used: walk when an SAV request was rejected.
    pub mode: Mode,
    pub depart: Time,
    pub arrive: Option<Time>,
    /// Travelled distance; the direct distance for SAV rides.
    pub distance: f64,
    pub request: Option<u32>,
}

impl LegRecord {
    pub fn rejected(&self) -> bool {
        self.planned == Mode::Sav && self.mode != Mode::Sav
    }
}

/// What one agent did during the day.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PersonDay {
    pub act_start: Vec<Option<Time>>,
    pub act_end: Vec<Option<Time>>,
    pub legs: Vec<LegRecord>,
    pub stuck: bool,
}

#[derive(Debug)]
pub struct DayOutput {
    pub events: Vec<Event>,
    pub persons: Vec<PersonDay>,
    pub requests: Vec<Request>,
    pub vehicles: Vec<SavVehicle>,
    /// Time of the last processed second.
    pub end_time: Time,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum State {
    AtActivity(usize),
    /// On leg k, teleported or in a vehicle.
    Travelling(usize),
    Done,
}

fn invalid(person: usize, message: impl Into<String>) -> Error {
    Error::Population(PopulationError::InvalidPlan {
        person: person as u32,
        message: message.into(),
    })
}

/// Checks plans are executable: end times on all but the last activity and
/// complete car routes.
pub fn validate_plans(net: &Network, plans: &[&Plan]) -> Result<()> {
    for (p, plan) in plans.iter().enumerate() {
        let n = plan.activities.len();
        if n == 0 || plan.legs.len() + 1 != n {
            return Err(invalid(p, "needs one leg between consecutive activities"));
        }
        if plan.activities[..n - 1].iter().any(|a| a.end_time.is_none()) {
            return Err(invalid(p, "only the last activity may be open-ended"));
        }
        for (k, leg) in plan.legs.iter().enumerate() {
            let (o, d) = (plan.activities[k].link, plan.activities[k + 1].link);
            match leg.mode {
                Mode::Car => check_route(net, o, d, &leg.route).map_err(|m| invalid(p, format!("leg {k}: {m}")))?,
                Mode::Sav if !net.link(o).sav || !net.link(d).sav => {
                    return Err(invalid(p, format!("leg {k}: sav leg on a link closed to the fleet")))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn check_route(net: &Network, o: LinkIdx, d: LinkIdx, route: &[LinkIdx]) -> std::result::Result<(), String> {
    if o == d {
        return if route.is_empty() { Ok(()) } else { Err("route on a same-link leg".into()) };
    }
    let Some(&last) = route.last() else {
        return Err("car leg without a route".into());
    };
    if last != d {
        return Err("route does not end at the destination".into());
    }
    let mut prev = o;
    for &l in route {
        if net.link(prev).to != net.link(l).from {
            return Err(format!("route breaks at link {}", net.link(l).id));
        }
        if !net.link(l).car {
            return Err(format!("link {} is closed to cars", net.link(l).id));
        }
        prev = l;
    }
    Ok(())
}

struct Day<'a> {
    net: &'a Network,
    plans: &'a [&'a Plan],
    params: &'a MobsimParams,
    ev: Vec<Event>,
    persons: Vec<PersonDay>,
    state: Vec<State>,
    agenda: BinaryHeap<Reverse<(Time, u32)>>,
    active: usize,
}

impl Day<'_> {
    fn start_activity(&mut self, p: u32, k: usize, now: Time) {
        let plan = self.plans[p as usize];
        self.persons[p as usize].act_start[k] = Some(now);
        if k + 1 == plan.activities.len() {
            self.state[p as usize] = State::Done;
            self.active -= 1;
        } else {
            self.state[p as usize] = State::AtActivity(k);
            let end = plan.activities[k].end_time.expect("validated");
            self.agenda.push(Reverse((end.max(now), p)));
        }
    }

    /// Arrival at the end of leg k.
    fn arrive(&mut self, p: u32, now: Time) {
        let State::Travelling(k) = self.state[p as usize] else {
            return;
        };
        let leg = &mut self.persons[p as usize].legs[k];
        leg.arrive = Some(now);
        let next = &self.plans[p as usize].activities[k + 1];
        self.ev.push(
            Event::new(now, EventKind::PersonArrives)
                .person(p)
                .link(next.link)
                .attrs(Attrs::Act(next.kind)),
        );
        self.start_activity(p, k + 1, now);
    }

    fn depart(&mut self, p: u32, k: usize, mode: Mode, now: Time, distance: f64, request: Option<u32>) {
        let plan = self.plans[p as usize];
        let mut e = Event::new(now, EventKind::Depart)
            .person(p)
            .link(plan.activities[k].link)
            .attrs(Attrs::Mode(mode));
        if mode == Mode::Car {
            e = e.vehicle(VehicleRef::Car(p));
        }
        self.ev.push(e);
        self.persons[p as usize].legs.push(LegRecord {
            planned: plan.legs[k].mode,
            mode,
            depart: now,
            arrive: None,
            distance,
            request,
        });
        self.state[p as usize] = State::Travelling(k);
    }

    fn teleport(&mut self, p: u32, k: usize, mode: Mode, now: Time, request: Option<u32>) {
        let plan = self.plans[p as usize];
        let beeline = self.net.beeline(plan.activities[k].link, plan.activities[k + 1].link);
        let tp = &self.params.teleport;
        let arrival = tp.arrival(mode, beeline, now).expect("teleported mode");
        self.depart(p, k, mode, now, tp.distance(beeline), request);
        self.agenda.push(Reverse((arrival, p)));
    }
}

/// Executes one day. Fleet vehicles must be parked at the start.
pub fn run_day(
    net: &Network,
    plans: &[&Plan],
    fleet: FleetSetup,
    profile: &TravelTimeProfile,
    params: &MobsimParams,
) -> Result<DayOutput> {
    validate_plans(net, plans)?;
    let n = plans.len();
    let mut day = Day {
        net,
        plans,
        params,
        ev: Vec::new(),
        persons: plans
            .iter()
            .map(|p| PersonDay {
                act_start: vec![None; p.activities.len()],
                act_end: vec![None; p.activities.len()],
                legs: Vec::with_capacity(p.legs.len()),
                stuck: false,
            })
            .collect(),
        state: vec![State::Done; n],
        agenda: BinaryHeap::new(),
        active: n,
    };
    let mut sav = FleetSim::new(fleet.vehicles, 0, &mut day.ev);
    let mut traffic = Traffic::new(net, params.sample_rate, n);
    for p in 0..n as u32 {
        day.start_activity(p, 0, 0);
    }

    let rebalancing = fleet.rebalance.enabled && fleet.demand.is_some() && !sav.vehicles.is_empty();
    let interval = fleet.rebalance.interval.max(1);
    let mut next_rebalance = interval;
    let mut skim: Option<(usize, Skim)> = None;
    let mut arrivals = Vec::new();
    let mut now = 0;

    loop {
        let candidates = [
            day.agenda.peek().map(|r| r.0 .0),
            sav.next_wake(),
            traffic.next_wake(),
            (rebalancing && day.active > 0).then_some(next_rebalance),
        ];
        let Some(t) = candidates.into_iter().flatten().min() else {
            break;
        };
        if t > params.horizon {
            now = params.horizon;
            break;
        }
        now = t.max(now);

        // fleet transitions
        arrivals.clear();
        sav.step(now, &mut day.ev, &mut arrivals)?;
        for &r in &arrivals {
            day.arrive(sav.requests[r as usize].person, now);
        }

        // agenda
        while let Some(&Reverse((t, p))) = day.agenda.peek() {
            if t > now {
                break;
            }
            day.agenda.pop();
            match day.state[p as usize] {
                State::Travelling(_) => day.arrive(p, now),
                State::AtActivity(k) => {
                    let plan = plans[p as usize];
                    let act = &plan.activities[k];
                    day.persons[p as usize].act_end[k] = Some(now);
                    day.ev.push(
                        Event::new(now, EventKind::ActEnd)
                            .person(p)
                            .link(act.link)
                            .attrs(Attrs::Act(act.kind)),
                    );
                    let leg = &plan.legs[k];
                    let dest = plan.activities[k + 1].link;
                    match leg.mode {
                        Mode::Walk | Mode::Pt => day.teleport(p, k, leg.mode, now, None),
                        Mode::Car => {
                            let dist = leg.route.iter().map(|&l| net.link(l).length).sum();
                            day.depart(p, k, Mode::Car, now, dist, None);
                            if leg.route.is_empty() {
                                day.arrive(p, now);
                            } else {
                                traffic.depart(p, act.link, leg.route.clone(), now);
                            }
                        }
                        Mode::Sav => {
                            let bin = profile.bin_of(now as f64);
                            if skim.as_ref().is_none_or(|s| s.0 != bin) {
                                skim = Some((bin, Skim::from_profile(net, profile, now as f64, Mode::Sav)));
                            }
                            let sk = &skim.as_ref().expect("just built").1;
                            let ctx = InsertionContext {
                                net,
                                skim: sk,
                                params: fleet.dispatch,
                                ridesharing: fleet.ridesharing,
                            };
                            let row = sk.forward(net, act.link);
                            let direct = sk.leg_time(net, &row, act.link, dest);
                            let dist = sk
                                .path(net, &row, dest)
                                .map_or(0.0, |ls| ls.iter().map(|&l| net.link(l).length).sum());
                            let id = sav.requests.len() as u32;
                            let req = Request::new(id, p, act.link, dest, now, direct.unwrap_or(0), dist);
                            day.ev.push(
                                Event::new(now, EventKind::RequestSubmitted)
                                    .person(p)
                                    .link(act.link)
                                    .request(id)
                                    .attrs(Attrs::Request {
                                        dest,
                                        direct_time: req.direct_time,
                                        direct_distance: dist,
                                    }),
                            );
                            let best = direct.and_then(|_| find_best_insertion(&ctx, &sav.vehicles, &sav.requests, &req, now));
                            sav.requests.push(req);
                            match best {
                                Some(ins) => {
                                    day.ev.push(
                                        Event::new(now, EventKind::RequestScheduled)
                                            .person(p)
                                            .vehicle(VehicleRef::Sav(sav.vehicles[ins.vehicle].id))
                                            .request(id)
                                            .attrs(Attrs::Scheduled { extended: ins.extended }),
                                    );
                                    day.depart(p, k, Mode::Sav, now, dist, Some(id));
                                    arrivals.clear();
                                    sav.commit(&ctx, id, &ins, now, &mut day.ev, &mut arrivals)?;
                                    for &r in &arrivals {
                                        day.arrive(sav.requests[r as usize].person, now);
                                    }
                                }
                                None => {
                                    sav.requests[id as usize]
                                        .reject()
                                        .map_err(|e| Error::Invariant(e.to_string()))?;
                                    day.ev.push(
                                        Event::new(now, EventKind::RequestRejected)
                                            .person(p)
                                            .link(act.link)
                                            .request(id),
                                    );
                                    day.teleport(p, k, Mode::Walk, now, Some(id));
                                }
                            }
                        }
                    }
                }
                State::Done => {}
            }
        }

        // car queues
        arrivals.clear();
        traffic.step(now, &mut day.ev, &mut arrivals);
        for &p in &arrivals {
            day.arrive(p, now);
        }

        // rebalancing
        if rebalancing && now >= next_rebalance {
            if day.active > 0 {
                let sk = Skim::from_profile(net, profile, now as f64, Mode::Sav);
                let demand = fleet.demand.expect("rebalancing needs an estimate");
                let orders = rebalance(fleet.zoning, &sav.vehicles, demand, now, fleet.rebalance);
                sav.relocate(net, &sk, &orders, now, &mut day.ev);
            }
            while next_rebalance <= now {
                next_rebalance += interval;
            }
        }
    }

    // stranding records for whatever is still underway
    for p in 0..n as u32 {
        let s = day.state[p as usize];
        if s == State::Done {
            continue;
        }
        day.persons[p as usize].stuck = true;
        let plan = plans[p as usize];
        let mut e = Event::new(now, EventKind::PersonStuck).person(p);
        match s {
            State::AtActivity(k) => e = e.link(plan.activities[k].link),
            State::Travelling(k) => {
                if plan.legs[k].mode == Mode::Car && day.persons[p as usize].legs[k].mode == Mode::Car {
                    // a car still on its departure list has no open traversal
                    e = match traffic.location(p) {
                        Some(l) => e.vehicle(VehicleRef::Car(p)).link(l),
                        None => e.link(plan.activities[k].link),
                    };
                } else {
                    e = e.link(plan.activities[k].link);
                }
            }
            State::Done => unreachable!(),
        }
        day.ev.push(e);
    }
    for v in &sav.vehicles {
        use crate::savfleet::Task;
        let open = match &v.task {
            Task::ToStop { pos } => Some(v.stops[0].leg.links[*pos]),
            Task::Relocate { route, pos } => Some(route.links[*pos]),
            _ => None,
        };
        if let Some(l) = open {
            day.ev.push(Event::new(now, EventKind::PersonStuck).vehicle(VehicleRef::Sav(v.id)).link(l));
        }
    }

    Ok(DayOutput {
        events: day.ev,
        persons: day.persons,
        requests: sav.requests,
        vehicles: sav.vehicles,
        end_time: now,
    })
}
