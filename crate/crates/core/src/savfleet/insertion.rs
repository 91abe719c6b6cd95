//! Ridesharing insertion dispatch.
//!
//! A new request's pickup and dropoff are inserted into one vehicle's stop
//! sequence without reordering existing stops. Every vehicle, pickup index
//! `i` and dropoff index `j >= i` is evaluated; among feasible insertions the
//! first one with the smallest increase of vehicle work time wins.
//!
//! Indexing: `i = 0` inserts the pickup right after the vehicle's divert
//! point, `i = k` right after its k-th future stop. New legs are timed with the
//! snapshot taken at decision time; legs between untouched consecutive stops
//! keep their committed durations and only shift.

use serde::{Deserialize, Serialize};

use super::request::Request;
use super::schedule::{Route, SavVehicle, Stop, Task};
use crate::network::{LinkIdx, Network, Skim, SkimRow};
use crate::Time;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispatchParams {
    /// Maximum ride time as a multiple of the direct drive time.
    pub detour_factor: f64,
    /// Maximum wait between submission and pickup, seconds.
    pub max_wait: Time,
    /// Duration of every pickup/dropoff stop, seconds.
    pub stop_duration: Time,
    /// Accept rides beyond the detour cap (penalized in scoring) as long as
    /// the wait bound holds.
    pub extended_detour: bool,
}

impl Default for DispatchParams {
    fn default() -> Self {
        DispatchParams {
            detour_factor: 1.3,
            max_wait: 900,
            stop_duration: 60,
            extended_detour: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Insertion {
    /// Index into the vehicle slice.
    pub vehicle: usize,
    pub pickup_idx: usize,
    pub dropoff_idx: usize,
    pub delta_work: Time,
    /// Departure from the pickup stop.
    pub pickup_time: Time,
    /// Arrival at the dropoff stop.
    pub dropoff_time: Time,
    pub extended: bool,
}

pub struct InsertionContext<'a> {
    pub net: &'a Network,
    pub skim: &'a Skim,
    pub params: &'a DispatchParams,
    pub ridesharing: bool,
}

/// Timing constraints of a request already committed to a vehicle.
#[derive(Clone, Copy, Debug)]
struct Committed {
    /// 0 when the pickup time is already fixed.
    pickup_stop: usize,
    pickup_time: Time,
    dropoff_stop: usize,
    dropoff_time: Time,
    wait_deadline: Time,
    max_ride: f64,
}

/// Flattened view of one vehicle's schedule. Index 0 is the divert point.
#[derive(Default)]
struct View {
    locs: Vec<LinkIdx>,
    arr: Vec<Time>,
    dep: Vec<Time>,
    occ: Vec<u32>,
    committed: Vec<Committed>,
    ids: Vec<u32>,
    base_end: Time,
}

impl View {
    fn load(&mut self, v: &SavVehicle, requests: &[Request], params: &DispatchParams, now: Time) {
        let (start, t0) = v.divert_point(now);
        self.locs.clear();
        self.arr.clear();
        self.dep.clear();
        self.occ.clear();
        self.committed.clear();
        self.ids.clear();
        self.locs.push(start);
        self.arr.push(t0);
        self.dep.push(t0);
        self.occ.push(v.load_at_divert_point());

        let fixed = |id: u32, t: Time| Committed {
            pickup_stop: 0,
            pickup_time: t,
            dropoff_stop: usize::MAX,
            dropoff_time: 0,
            wait_deadline: Time::MAX,
            max_ride: requests[id as usize].max_ride,
        };
        for &id in &v.onboard {
            let t = requests[id as usize].pickup_time.expect("onboard request has a pickup time");
            self.committed.push(fixed(id, t));
            self.ids.push(id);
        }
        if let Task::AtStop { stop } = &v.task {
            for &id in &stop.pickups {
                self.committed.push(fixed(id, stop.departure));
                self.ids.push(id);
            }
        }
        for (k, s) in v.stops.iter().enumerate() {
            let k = k + 1;
            self.locs.push(s.link);
            self.arr.push(s.arrival);
            self.dep.push(s.departure);
            let load = self.occ[k - 1] + s.pickups.len() as u32 - s.dropoffs.len() as u32;
            self.occ.push(load);
            for &id in &s.pickups {
                let r = &requests[id as usize];
                self.committed.push(Committed {
                    pickup_stop: k,
                    pickup_time: s.departure,
                    dropoff_stop: usize::MAX,
                    dropoff_time: 0,
                    wait_deadline: r.submit_time + params.max_wait,
                    max_ride: r.max_ride,
                });
                self.ids.push(id);
            }
            for &id in &s.dropoffs {
                let at = self
                    .ids
                    .iter()
                    .position(|&x| x == id)
                    .expect("dropoff of a request picked up earlier in the schedule");
                let c = &mut self.committed[at];
                c.dropoff_stop = k;
                c.dropoff_time = s.arrival;
            }
        }
        self.base_end = match v.work_end() {
            Some(t) => t,
            None => now,
        };
    }

    fn n(&self) -> usize {
        self.locs.len() - 1
    }
}

/// Drive times between the new request's endpoints and every schedule point.
struct LegTimes<'a> {
    ctx: &'a InsertionContext<'a>,
    pickup: LinkIdx,
    dropoff: LinkIdx,
    to_pickup: SkimRow,
    from_pickup: SkimRow,
    to_dropoff: SkimRow,
    from_dropoff: SkimRow,
}

impl<'a> LegTimes<'a> {
    fn new(ctx: &'a InsertionContext<'a>, req: &Request) -> Self {
        let (net, skim) = (ctx.net, ctx.skim);
        LegTimes {
            ctx,
            pickup: req.origin,
            dropoff: req.dest,
            to_pickup: skim.backward(net, req.origin),
            from_pickup: skim.forward(net, req.origin),
            to_dropoff: skim.backward(net, req.dest),
            from_dropoff: skim.forward(net, req.dest),
        }
    }

    fn to_p(&self, from: LinkIdx) -> Option<Time> {
        self.ctx.skim.leg_time(self.ctx.net, &self.to_pickup, from, self.pickup)
    }
    fn from_p(&self, to: LinkIdx) -> Option<Time> {
        self.ctx.skim.leg_time(self.ctx.net, &self.from_pickup, self.pickup, to)
    }
    fn to_d(&self, from: LinkIdx) -> Option<Time> {
        self.ctx.skim.leg_time(self.ctx.net, &self.to_dropoff, from, self.dropoff)
    }
    fn from_d(&self, to: LinkIdx) -> Option<Time> {
        self.ctx.skim.leg_time(self.ctx.net, &self.from_dropoff, self.dropoff, to)
    }
}

/// Evaluates insertion (i, j) on a loaded view. `None` if infeasible.
fn evaluate(
    view: &View,
    legs: &LegTimes,
    req: &Request,
    capacity: u32,
    params: &DispatchParams,
    i: usize,
    j: usize,
) -> Option<(Time, Time, Time, bool)> {
    let n = view.n();
    let s = params.stop_duration;
    if view.occ[i] + 1 > capacity {
        return None;
    }
    if (i + 1..=j).any(|k| view.occ[k] + 1 > capacity) {
        return None;
    }
    let p_arr = view.dep[i] + legs.to_p(view.locs[i])?;
    let p_dep = p_arr + s;
    if p_dep - req.submit_time > params.max_wait {
        return None;
    }
    // shift(k) for existing stops: 0 for k <= i, first for i < k <= j, second for k > j
    let (first, d_arr, second) = if i == j {
        let d_arr = p_dep + legs.from_p(legs.dropoff)?;
        let second = if j < n {
            d_arr + s + legs.from_d(view.locs[j + 1])? - view.arr[j + 1]
        } else {
            0
        };
        (0, d_arr, second)
    } else {
        let first = p_dep + legs.from_p(view.locs[i + 1])? - view.arr[i + 1];
        let d_arr = view.dep[j] + first + legs.to_d(view.locs[j])?;
        let second = if j < n {
            d_arr + s + legs.from_d(view.locs[j + 1])? - view.arr[j + 1]
        } else {
            0
        };
        (first, d_arr, second)
    };
    let shift = |k: usize| {
        if k <= i {
            0
        } else if k <= j {
            first
        } else {
            second
        }
    };

    let ride = d_arr - p_dep;
    let within_cap = ride as f64 <= params.detour_factor * req.direct_time as f64;
    if !within_cap && !params.extended_detour {
        return None;
    }
    for c in &view.committed {
        let pickup = if c.pickup_stop == 0 {
            c.pickup_time
        } else {
            let t = c.pickup_time + shift(c.pickup_stop);
            if t > c.wait_deadline {
                return None;
            }
            t
        };
        let dropoff = c.dropoff_time + shift(c.dropoff_stop);
        if (dropoff - pickup) as f64 > c.max_ride {
            return None;
        }
    }
    let new_end = if j == n {
        d_arr + s
    } else {
        view.dep[n] + shift(n)
    };
    Some((new_end - view.base_end, p_dep, d_arr, !within_cap))
}

fn is_candidate(v: &SavVehicle, ridesharing: bool) -> bool {
    ridesharing || (v.stops.is_empty() && v.load_at_divert_point() == 0)
}

/// Scans every vehicle and every (i, j) pair; returns the first insertion
/// with the smallest work-time increase, or `None` if nothing is feasible.
pub fn find_best_insertion(
    ctx: &InsertionContext,
    vehicles: &[SavVehicle],
    requests: &[Request],
    req: &Request,
    now: Time,
) -> Option<Insertion> {
    let legs = LegTimes::new(ctx, req);
    let mut view = View::default();
    let mut best: Option<Insertion> = None;
    for (vi, v) in vehicles.iter().enumerate() {
        if !is_candidate(v, ctx.ridesharing) {
            continue;
        }
        view.load(v, requests, ctx.params, now);
        let n = view.n();
        for i in 0..=n {
            if view.occ[i] + 1 > v.capacity {
                continue;
            }
            for j in i..=n {
                if j > i && view.occ[j] + 1 > v.capacity {
                    break;
                }
                if let Some((dw, pt, dt, ext)) = evaluate(&view, &legs, req, v.capacity, ctx.params, i, j) {
                    if best.is_none_or(|b| dw < b.delta_work) {
                        best = Some(Insertion {
                            vehicle: vi,
                            pickup_idx: i,
                            dropoff_idx: j,
                            delta_work: dw,
                            pickup_time: pt,
                            dropoff_time: dt,
                            extended: ext,
                        });
                    }
                }
            }
        }
    }
    best
}

/// Feasibility and cost of one specific insertion; `None` if infeasible or
/// the vehicle is not a candidate.
pub fn evaluate_insertion(
    ctx: &InsertionContext,
    vehicle: &SavVehicle,
    requests: &[Request],
    req: &Request,
    now: Time,
    pickup_idx: usize,
    dropoff_idx: usize,
) -> Option<Insertion> {
    if !is_candidate(vehicle, ctx.ridesharing) || dropoff_idx < pickup_idx {
        return None;
    }
    let legs = LegTimes::new(ctx, req);
    let mut view = View::default();
    view.load(vehicle, requests, ctx.params, now);
    if dropoff_idx > view.n() {
        return None;
    }
    evaluate(&view, &legs, req, vehicle.capacity, ctx.params, pickup_idx, dropoff_idx).map(
        |(delta_work, pickup_time, dropoff_time, extended)| Insertion {
            vehicle: 0,
            pickup_idx,
            dropoff_idx,
            delta_work,
            pickup_time,
            dropoff_time,
            extended,
        },
    )
}

#[derive(Debug, thiserror::Error)]
pub enum ApplyError {
    #[error("no route to link {0:?}")]
    NoRoute(LinkIdx),
    #[error("applied schedule disagrees with evaluation: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Transition(#[from] super::request::IllegalTransition),
}

/// Commits an insertion to the vehicle's schedule and marks the request scheduled.
///
/// A parked vehicle keeps its `Stay` task; the caller starts the first leg.
pub fn apply_insertion(
    ctx: &InsertionContext,
    vehicle: &mut SavVehicle,
    requests: &mut [Request],
    req_id: u32,
    ins: &Insertion,
    now: Time,
) -> Result<(), ApplyError> {
    let (net, skim, s) = (ctx.net, ctx.skim, ctx.params.stop_duration);
    let (i, j) = (ins.pickup_idx, ins.dropoff_idx);
    let (pickup, dropoff) = {
        let r = &requests[req_id as usize];
        (r.origin, r.dest)
    };
    let (start, t0) = vehicle.divert_point(now);
    let point = |v: &SavVehicle, k: usize| -> (LinkIdx, Time) {
        if k == 0 {
            (start, t0)
        } else {
            (v.stops[k - 1].link, v.stops[k - 1].departure)
        }
    };
    let plan = |from: LinkIdx, to: LinkIdx, at: Time| -> Result<Route, ApplyError> {
        let row = skim.forward(net, from);
        Route::plan(net, skim, &row, to, at).ok_or(ApplyError::NoRoute(to))
    };

    // Pickup leg, continuing on the current link when diverting a drive.
    let (from, at) = point(vehicle, i);
    let mut p_leg = plan(from, pickup, at)?;
    if i == 0 {
        let current = match &vehicle.task {
            Task::ToStop { pos } => Some((&vehicle.stops[0].leg, *pos)),
            Task::Relocate { route, pos } => Some((route, *pos)),
            _ => None,
        };
        if let Some((route, pos)) = current {
            let entered = if pos == 0 { route.start } else { route.exits[pos - 1] };
            let mut links = vec![route.links[pos]];
            links.extend_from_slice(&p_leg.links);
            let mut exits = vec![route.exits[pos]];
            exits.extend_from_slice(&p_leg.exits);
            p_leg = Route {
                start: entered,
                links,
                exits,
            };
        }
    }
    let p_arr = p_leg.end();
    let p_stop = Stop {
        link: pickup,
        arrival: p_arr,
        departure: p_arr + s,
        pickups: vec![req_id],
        dropoffs: Vec::new(),
        leg: p_leg,
    };

    let mut stops: Vec<Stop> = vehicle.stops.drain(..).collect();
    let n = stops.len();
    let d_stop;
    if i == j {
        let d_leg = plan(pickup, dropoff, p_stop.departure)?;
        let d_arr = d_leg.end();
        d_stop = Stop {
            link: dropoff,
            arrival: d_arr,
            departure: d_arr + s,
            pickups: Vec::new(),
            dropoffs: vec![req_id],
            leg: d_leg,
        };
        if i < n {
            reconnect(&mut stops[i..], dropoff, d_stop.departure, &plan)?;
        }
    } else {
        reconnect(&mut stops[i..j], pickup, p_stop.departure, &plan)?;
        let prev = &stops[j - 1];
        let d_leg = plan(prev.link, dropoff, prev.departure)?;
        let d_arr = d_leg.end();
        d_stop = Stop {
            link: dropoff,
            arrival: d_arr,
            departure: d_arr + s,
            pickups: Vec::new(),
            dropoffs: vec![req_id],
            leg: d_leg,
        };
        if j < n {
            reconnect(&mut stops[j..], dropoff, d_stop.departure, &plan)?;
        }
    }

    let (p_dep, d_arr) = (p_stop.departure, d_stop.arrival);
    stops.insert(j, d_stop);
    stops.insert(i, p_stop);
    vehicle.stops = stops.into();

    if i == 0 {
        match vehicle.task {
            Task::ToStop { .. } => vehicle.task = Task::ToStop { pos: 0 },
            Task::Relocate { .. } => vehicle.task = Task::ToStop { pos: 0 },
            _ => {}
        }
    }

    if p_dep != ins.pickup_time || d_arr != ins.dropoff_time {
        return Err(ApplyError::Mismatch(format!(
            "pickup {p_dep} vs {}, dropoff {d_arr} vs {}",
            ins.pickup_time, ins.dropoff_time
        )));
    }
    let ride = (d_arr - p_dep) as f64;
    let r = &mut requests[req_id as usize];
    let max_ride = if ins.extended {
        ride
    } else {
        ctx.params.detour_factor * r.direct_time as f64
    };
    r.schedule(vehicle.id, max_ride, ins.extended)?;
    Ok(())
}

/// Re-plans the leg into `stops[0]` from a new predecessor and shifts the
/// remaining stops by the same amount.
fn reconnect(
    stops: &mut [Stop],
    from: LinkIdx,
    at: Time,
    plan: &impl Fn(LinkIdx, LinkIdx, Time) -> Result<Route, ApplyError>,
) -> Result<(), ApplyError> {
    let Some((head, rest)) = stops.split_first_mut() else {
        return Ok(());
    };
    let leg = plan(from, head.link, at)?;
    let delta = leg.end() - head.arrival;
    head.arrival += delta;
    head.departure += delta;
    head.leg = leg;
    for s in rest {
        s.shift(delta);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::Mode;
    use crate::network::{build_network, LinkSpec, Node};

    /// A line of nodes 0..n with forward links l{k}: k -> k+1 of 100 s each
    /// and backward links.
    fn line(n: usize) -> Network {
        let nodes = (0..n)
            .map(|k| Node {
                id: format!("n{k}"),
                x: k as f64 * 1000.0,
                y: 0.0,
            })
            .collect();
        let mut links = Vec::new();
        for k in 0..n - 1 {
            for (a, b, tag) in [(k, k + 1, "f"), (k + 1, k, "b")] {
                links.push(LinkSpec {
                    id: format!("{tag}{k}"),
                    from: format!("n{a}"),
                    to: format!("n{b}"),
                    length_m: 1000.0,
                    free_speed_ms: 10.0,
                    capacity_vph: 1000.0,
                    lanes: 1,
                    car: true,
                    sav: true,
                });
            }
        }
        build_network(nodes, links).unwrap()
    }

    fn fwd(net: &Network, k: usize) -> LinkIdx {
        net.link_idx(&format!("f{k}")).unwrap()
    }

    fn skim(net: &Network) -> Skim {
        Skim::from_link_times(vec![100; net.num_links()], Mode::Sav)
    }

    fn submit(requests: &mut Vec<Request>, origin: LinkIdx, dest: LinkIdx, now: Time, direct: Time) -> u32 {
        let id = requests.len() as u32;
        requests.push(Request::new(id, id, origin, dest, now, direct, direct as f64 * 10.0));
        id
    }

    #[test]
    fn idle_vehicle_at_origin_waits_only_the_stop() {
        let net = line(6);
        let sk = skim(&net);
        let params = DispatchParams::default();
        let ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: true,
        };
        let mut vehicles = vec![SavVehicle::new(0, 4, fwd(&net, 0), 0)];
        let mut requests = Vec::new();
        let r = submit(&mut requests, fwd(&net, 0), fwd(&net, 3), 1000, 300);
        let ins = find_best_insertion(&ctx, &vehicles, &requests, &requests[r as usize].clone(), 1000).unwrap();
        assert_eq!(ins.pickup_time - 1000, 60);
        assert_eq!(ins.dropoff_time - ins.pickup_time, 300);
        assert_eq!(ins.delta_work, 60 + 300 + 60);
        apply_insertion(&ctx, &mut vehicles[0], &mut requests, r, &ins, 1000).unwrap();
        assert_eq!(vehicles[0].stops.len(), 2);
        assert_eq!(vehicles[0].stops[1].leg.links.len(), 3);
    }

    #[test]
    fn idle_vehicle_beats_detouring_one_when_cheaper() {
        let net = line(8);
        let sk = skim(&net);
        let params = DispatchParams::default();
        let ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: true,
        };
        let mut requests = Vec::new();
        // vehicle 0 is busy heading to the far end, vehicle 1 idles at the pickup
        let mut busy = SavVehicle::new(0, 4, fwd(&net, 0), 0);
        let first = submit(&mut requests, fwd(&net, 0), fwd(&net, 6), 0, 600);
        let ins = find_best_insertion(&ctx, std::slice::from_ref(&busy), &requests, &requests[0].clone(), 0).unwrap();
        apply_insertion(&ctx, &mut busy, &mut requests, first, &ins, 0).unwrap();
        let idle = SavVehicle::new(1, 4, fwd(&net, 3), 0);
        let vehicles = vec![busy, idle];
        // request going backwards from link f3's end: the busy vehicle would need a U-turn detour
        let back = net.link_idx("b1").unwrap();
        let r = submit(&mut requests, fwd(&net, 3), back, 10, 200);
        let ins = find_best_insertion(&ctx, &vehicles, &requests, &requests[r as usize].clone(), 10).unwrap();
        assert_eq!(ins.vehicle, 1);
        // hand computation: 0 s to pickup, 60 s stop, 300 s to b1 (b3,b2,b1), 60 s stop
        assert_eq!(ins.delta_work, 60 + 300 + 60);
    }

    #[test]
    fn ties_go_to_the_lower_vehicle_id() {
        let net = line(5);
        let sk = skim(&net);
        let params = DispatchParams::default();
        let ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: true,
        };
        let vehicles: Vec<_> = (0..3).map(|id| SavVehicle::new(id, 4, fwd(&net, 1), 0)).collect();
        let mut requests = Vec::new();
        let r = submit(&mut requests, fwd(&net, 2), fwd(&net, 3), 0, 100);
        let ins = find_best_insertion(&ctx, &vehicles, &requests, &requests[r as usize].clone(), 0).unwrap();
        assert_eq!((ins.vehicle, ins.pickup_idx, ins.dropoff_idx), (0, 0, 0));
    }

    #[test]
    fn without_ridesharing_only_unassigned_vehicles_are_candidates() {
        let net = line(6);
        let sk = skim(&net);
        let mut params = DispatchParams::default();
        params.extended_detour = false;
        let mut ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: false,
        };
        let mut requests = Vec::new();
        let mut v = SavVehicle::new(0, 4, fwd(&net, 0), 0);
        let a = submit(&mut requests, fwd(&net, 0), fwd(&net, 4), 0, 400);
        let ins = find_best_insertion(&ctx, std::slice::from_ref(&v), &requests, &requests[0].clone(), 0).unwrap();
        apply_insertion(&ctx, &mut v, &mut requests, a, &ins, 0).unwrap();
        let b = submit(&mut requests, fwd(&net, 1), fwd(&net, 3), 0, 200);
        let vehicles = vec![v];
        assert!(find_best_insertion(&ctx, &vehicles, &requests, &requests[b as usize].clone(), 0).is_none());
        ctx.ridesharing = true;
        assert!(find_best_insertion(&ctx, &vehicles, &requests, &requests[b as usize].clone(), 0).is_some());
    }

    #[test]
    fn full_vehicle_rejects() {
        let net = line(6);
        let sk = skim(&net);
        let params = DispatchParams::default();
        let ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: true,
        };
        let mut requests = Vec::new();
        let mut v = SavVehicle::new(0, 2, fwd(&net, 0), 0);
        for _ in 0..2 {
            let r = submit(&mut requests, fwd(&net, 0), fwd(&net, 4), 0, 400);
            let ins = find_best_insertion(&ctx, std::slice::from_ref(&v), &requests, &requests[r as usize].clone(), 0).unwrap();
            apply_insertion(&ctx, &mut v, &mut requests, r, &ins, 0).unwrap();
        }
        // stops: P1 P2 D1 D2, load 2 between P2 and D1
        assert_eq!(v.stops.len(), 4);
        let r = submit(&mut requests, fwd(&net, 0), fwd(&net, 2), 0, 200);
        let req = requests[r as usize].clone();
        assert!(evaluate_insertion(&ctx, &v, &requests, &req, 0, 2, 2).is_none());
        assert!(evaluate_insertion(&ctx, &v, &requests, &req, 0, 1, 3).is_none());
        assert!(evaluate_insertion(&ctx, &v, &requests, &req, 0, 0, 0).is_some());
        let best = find_best_insertion(&ctx, std::slice::from_ref(&v), &requests, &req, 0).unwrap();
        apply_insertion(&ctx, &mut v, &mut requests, r, &best, 0).unwrap();
        let mut load = 0;
        for s in &v.stops {
            load += s.pickups.len() as i32 - s.dropoffs.len() as i32;
            assert!(load <= 2);
        }
    }

    #[test]
    fn detour_cap_boundary_on_committed_rider() {
        // rider A: direct 1000 s, committed ride bound 1300 s. Inserting B inside
        // A's ride adds a stop (60 s) plus extra driving; 1310 s must fail.
        let net = line(14);
        let sk = skim(&net);
        let mut params = DispatchParams::default();
        params.extended_detour = false;
        let ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: true,
        };
        let mut requests = Vec::new();
        let mut v = SavVehicle::new(0, 4, fwd(&net, 0), 0);
        let a = submit(&mut requests, fwd(&net, 0), fwd(&net, 10), 0, 1000);
        let ins = find_best_insertion(&ctx, std::slice::from_ref(&v), &requests, &requests[0].clone(), 0).unwrap();
        apply_insertion(&ctx, &mut v, &mut requests, a, &ins, 0).unwrap();
        assert_eq!(requests[0].max_ride, 1300.0);
        // B along the way: pickup and dropoff stops add 120 s -> ride 1120 s, feasible
        let b = submit(&mut requests, fwd(&net, 3), fwd(&net, 5), 0, 200);
        let e = evaluate_insertion(&ctx, &v, &requests, &requests[b as usize].clone(), 0, 1, 1).unwrap();
        assert!(!e.extended);
        // shrink A's bound so the same insertion lands at 1.31x of a 855 s direct time
        requests[0].max_ride = 1.3 * 855.0; // 1111.5 < 1120
        assert!(evaluate_insertion(&ctx, &v, &requests, &requests[b as usize].clone(), 0, 1, 1).is_none());
        requests[0].max_ride = 1120.0;
        assert!(evaluate_insertion(&ctx, &v, &requests, &requests[b as usize].clone(), 0, 1, 1).is_some());
    }

    #[test]
    fn extended_tier_accepts_long_rides_within_the_wait_bound() {
        let net = line(14);
        let sk = skim(&net);
        let params = DispatchParams::default();
        let ctx = InsertionContext {
            net: &net,
            skim: &sk,
            params: &params,
            ridesharing: true,
        };
        let mut requests = Vec::new();
        // vehicle 740 s of driving away from the pickup; request submitted at 0
        let v = SavVehicle::new(0, 4, fwd(&net, 0), 0);
        // direct time declared short so the 200 s ride is 2x the baseline
        let r = submit(&mut requests, fwd(&net, 7), fwd(&net, 9), 0, 100);
        let e = evaluate_insertion(&ctx, &v, &requests, &requests[r as usize].clone(), 0, 0, 0).unwrap();
        assert_eq!(e.pickup_time, 700 + 60);
        assert!(e.extended);
        let mut strict = params.clone();
        strict.extended_detour = false;
        let ctx2 = InsertionContext {
            params: &strict,
            ..ctx
        };
        assert!(evaluate_insertion(&ctx2, &v, &requests, &requests[r as usize].clone(), 0, 0, 0).is_none());
        // wait above 900 s is never accepted
        let r2 = submit(&mut requests, fwd(&net, 11), fwd(&net, 12), 0, 100);
        assert!(evaluate_insertion(&ctx, &v, &requests, &requests[r2 as usize].clone(), 0, 0, 0).is_none());
    }
}
