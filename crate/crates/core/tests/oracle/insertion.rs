//! Exhaustive-enumeration oracle for insertion dispatch.
//!
//! The oracle times every candidate stop sequence from scratch with
//! Floyd-Warshall link-to-link times, keeps committed leg durations between
//! untouched consecutive stops, and checks every constraint by replaying the
//! sequence. It shares no code with the dispatcher beyond the input types.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use savsim::mode::Mode;
use savsim::network::{grid_city, GridSpec, LinkIdx, Network, Skim};
use savsim::savfleet::{
    apply_insertion, find_best_insertion, DispatchParams, InsertionContext, Request, RequestStatus, Route, SavVehicle,
    Stop, Task,
};
use savsim::Time;

const NOW: Time = 5000;
const INF: i64 = i64::MAX / 4;

fn floyd_warshall(net: &Network, tt: &[i64]) -> Vec<Vec<i64>> {
    let n = net.num_links();
    let mut d = vec![vec![INF; n]; n];
    for a in 0..n {
        d[a][a] = 0;
        let to = net.links()[a].to;
        for b in 0..n {
            if b != a && net.links()[b].from == to {
                d[a][b] = tt[b];
            }
        }
    }
    for k in 0..n {
        for a in 0..n {
            if d[a][k] == INF {
                continue;
            }
            for b in 0..n {
                let via = d[a][k] + d[k][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    d
}

struct Instance {
    net: Network,
    skim: Skim,
    fw: Vec<Vec<i64>>,
    vehicles: Vec<SavVehicle>,
    requests: Vec<Request>,
    new_req: Request,
    params: DispatchParams,
    ridesharing: bool,
}

fn route(net: &Network, skim: &Skim, from: LinkIdx, to: LinkIdx, start: Time, slack: Time) -> Route {
    let row = skim.forward(net, from);
    let mut r = Route::plan(net, skim, &row, to, start).unwrap();
    if let Some(last) = r.exits.last_mut() {
        *last += slack;
    }
    r
}

fn random_link(rng: &mut ChaCha8Rng, net: &Network) -> LinkIdx {
    LinkIdx(rng.random_range(0..net.num_links() as u32))
}

fn build_vehicle(rng: &mut ChaCha8Rng, inst: &mut Instance, id: u32) -> SavVehicle {
    let net = &inst.net;
    let skim = &inst.skim;
    let capacity = [2u32, 4, 6][rng.random_range(0..3)];
    let mut v = SavVehicle::new(id, capacity, random_link(rng, net), 0);
    let kind = rng.random_range(0..4);
    // current position and the time it is free to divert
    let (mut at_link, mut at_time);
    match kind {
        0 => {
            let link = random_link(rng, net);
            v.task = Task::Stay {
                link,
                since: NOW - rng.random_range(0..2000),
            };
            return v;
        }
        1 => {
            let (a, b) = loop {
                let a = random_link(rng, net);
                let b = random_link(rng, net);
                if a != b {
                    break (a, b);
                }
            };
            let mut r = route(net, skim, a, b, 0, 0);
            let pos = rng.random_range(0..r.links.len());
            let remaining = (if pos == 0 { r.start } else { r.exits[pos - 1] }, r.exits[pos]);
            let offset = NOW + rng.random_range(1..=(remaining.1 - remaining.0).max(1)) - r.exits[pos];
            r.shift(offset);
            v.task = Task::Relocate { route: r, pos };
            return v;
        }
        2 => {
            at_link = random_link(rng, net);
            at_time = 0;
        }
        _ => {
            at_link = random_link(rng, net);
            at_time = NOW + rng.random_range(0..60);
        }
    }

    // committed requests: onboard ones need only a dropoff
    let n_onboard = rng.random_range(0..=1usize.min(capacity as usize));
    let n_sched = rng.random_range(0..=2usize);
    let at_stop_pickup = kind == 3 && rng.random_bool(0.5);
    let mut seq: Vec<(bool, u32)> = Vec::new(); // (is_pickup, request)
    let mut fixed: Vec<(u32, Time)> = Vec::new();
    let mut new_id = || {
        let id = inst.requests.len() as u32;
        inst.requests.push(Request::new(id, id, LinkIdx(0), LinkIdx(0), 0, 100, 1000.0));
        id
    };
    for _ in 0..n_onboard {
        let r = new_id();
        fixed.push((r, NOW - rng.random_range(0..600)));
        seq.push((false, r));
    }
    let mut stop_pickups = Vec::new();
    if at_stop_pickup {
        let r = new_id();
        stop_pickups.push(r);
        fixed.push((r, at_time));
        seq.push((false, r));
    }
    for _ in 0..n_sched {
        let r = new_id();
        seq.push((true, r));
        seq.push((false, r));
    }
    // shuffle while keeping each pickup before its dropoff
    seq.shuffle(rng);
    for k in 0..seq.len() {
        if !seq[k].0 {
            if let Some(p) = seq[k + 1..].iter().position(|x| x.0 && x.1 == seq[k].1) {
                seq.swap(k, k + 1 + p);
            }
        }
    }
    let mut load = (n_onboard + stop_pickups.len()) as i64;
    for &(p, _) in &seq {
        load += if p { 1 } else { -1 };
        if load > capacity as i64 {
            // unsound initial state; fall back to an idle vehicle
            inst.requests.truncate(inst.requests.len() - n_onboard - stop_pickups.len() - n_sched);
            v.task = Task::Stay {
                link: at_link,
                since: NOW,
            };
            return v;
        }
    }

    if kind == 2 && seq.is_empty() {
        v.task = Task::Stay {
            link: at_link,
            since: NOW,
        };
        return v;
    }
    if kind == 3 {
        v.task = Task::AtStop {
            stop: Stop {
                link: at_link,
                arrival: NOW - 10,
                departure: at_time,
                pickups: stop_pickups,
                dropoffs: Vec::new(),
                leg: Route::empty(NOW - 10),
            },
        };
    }

    let mut first_leg_pos = None;
    for (k, &(is_pick, r)) in seq.iter().enumerate() {
        let link = random_link(rng, net);
        let slack = rng.random_range(0..40);
        let leg = if k == 0 && kind == 2 {
            // driving towards the first stop, currently somewhere along the leg
            let mut from = random_link(rng, net);
            while from == link {
                from = random_link(rng, net);
            }
            let mut leg = route(net, skim, from, link, 0, slack);
            let pos = rng.random_range(0..leg.links.len());
            let enter = if pos == 0 { leg.start } else { leg.exits[pos - 1] };
            let offset = NOW + rng.random_range(1..=(leg.exits[pos] - enter).max(1)) - leg.exits[pos];
            leg.shift(offset);
            first_leg_pos = Some(pos);
            leg
        } else {
            route(net, skim, at_link, link, at_time, slack)
        };
        let arrival = leg.end();
        let departure = arrival + 60;
        let (pickups, dropoffs) = if is_pick { (vec![r], vec![]) } else { (vec![], vec![r]) };
        v.stops.push_back(Stop {
            link,
            arrival,
            departure,
            pickups,
            dropoffs,
            leg,
        });
        at_link = link;
        at_time = departure;
    }
    if let Some(pos) = first_leg_pos {
        v.task = Task::ToStop { pos };
    }

    // request bookkeeping with random but satisfied bounds
    let pickup_dep = |r: u32| -> Option<Time> {
        v.stops.iter().find(|s| s.pickups.contains(&r)).map(|s| s.departure)
    };
    let dropoff_arr = |r: u32| v.stops.iter().find(|s| s.dropoffs.contains(&r)).unwrap().arrival;
    for &(_, r) in seq.iter().filter(|x| !x.0) {
        let req = &mut inst.requests[r as usize];
        let (pickup, fixed_pickup) = match fixed.iter().find(|f| f.0 == r) {
            Some(&(_, t)) => (t, true),
            None => (pickup_dep(r).unwrap(), false),
        };
        let ride = dropoff_arr(r) - pickup;
        req.status = RequestStatus::Scheduled;
        req.vehicle = Some(v.id);
        req.max_ride = (ride + rng.random_range(0..200)) as f64;
        req.submit_time = pickup - 900 + rng.random_range(0..200);
        if fixed_pickup {
            req.status = RequestStatus::PickedUp;
            req.pickup_time = Some(pickup);
            if !matches!(&v.task, Task::AtStop { stop } if stop.pickups.contains(&r)) {
                v.onboard.push(r);
            }
        }
    }
    v
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = grid_city(&GridSpec {
        size: rng.random_range(3..=4),
        ..GridSpec::default()
    });
    let tt: Vec<i64> = (0..net.num_links()).map(|_| rng.random_range(20..=150)).collect();
    let skim = Skim::from_link_times(tt.clone(), Mode::Sav);
    let fw = floyd_warshall(&net, &tt);
    let mut params = DispatchParams::default();
    params.extended_detour = rng.random_bool(0.5);
    let mut inst = Instance {
        new_req: Request::new(0, 0, LinkIdx(0), LinkIdx(0), 0, 0, 0.0),
        net,
        skim,
        fw,
        vehicles: Vec::new(),
        requests: Vec::new(),
        params,
        ridesharing: rng.random_bool(0.8),
    };
    let nv = rng.random_range(1..=3);
    for id in 0..nv {
        let v = build_vehicle(&mut rng, &mut inst, id);
        inst.vehicles.push(v);
    }
    let origin = random_link(&mut rng, &inst.net);
    let mut dest = random_link(&mut rng, &inst.net);
    while dest == origin {
        dest = random_link(&mut rng, &inst.net);
    }
    let id = inst.requests.len() as u32;
    let direct = inst.fw[origin.index()][dest.index()];
    inst.new_req = Request::new(id, id, origin, dest, NOW, direct, 0.0);
    inst.requests.push(inst.new_req.clone());
    inst
}

#[derive(Clone, Copy, Debug)]
struct OStop {
    link: LinkIdx,
    pick: Option<u32>,
    drop: Option<u32>,
    /// 1-based position in the committed schedule, if an existing stop.
    orig: Option<usize>,
}

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
struct Verdict {
    vehicle: usize,
    i: usize,
    j: usize,
    delta: Time,
    pickup: Time,
    dropoff: Time,
    extended: bool,
}

fn start_of(v: &SavVehicle) -> (LinkIdx, Time) {
    match &v.task {
        Task::Stay { link, .. } => (*link, NOW),
        Task::ToStop { pos } => (v.stops[0].leg.links[*pos], v.stops[0].leg.exits[*pos]),
        Task::Relocate { route, pos } => (route.links[*pos], route.exits[*pos]),
        Task::AtStop { stop } => (stop.link, stop.departure),
    }
}

/// Replays a stop sequence; returns (arrival, departure) per stop.
fn replay(inst: &Instance, v: &SavVehicle, seq: &[OStop]) -> Option<Vec<(Time, Time)>> {
    let (mut link, t0) = start_of(v);
    let mut dep = t0;
    let mut prev_orig = Some(0usize);
    let mut out = Vec::with_capacity(seq.len());
    for s in seq {
        let dur = match (s.orig, prev_orig) {
            (Some(k), Some(p)) if p + 1 == k => {
                let prev_dep = if p == 0 { t0 } else { v.stops[p - 1].departure };
                v.stops[k - 1].arrival - prev_dep
            }
            _ => {
                let d = inst.fw[link.index()][s.link.index()];
                if d >= INF {
                    return None;
                }
                d
            }
        };
        let arr = dep + dur;
        dep = arr + inst.params.stop_duration;
        out.push((arr, dep));
        link = s.link;
        prev_orig = s.orig;
    }
    Some(out)
}

fn oracle(inst: &Instance) -> Option<Verdict> {
    let p = &inst.params;
    let req = &inst.new_req;
    let mut best: Option<Verdict> = None;
    for (vi, v) in inst.vehicles.iter().enumerate() {
        let at_stop_pickups: Vec<u32> = match &v.task {
            Task::AtStop { stop } => stop.pickups.clone(),
            _ => Vec::new(),
        };
        let busy = !v.stops.is_empty() || !v.onboard.is_empty() || !at_stop_pickups.is_empty();
        if !inst.ridesharing && busy {
            continue;
        }
        let base: Vec<OStop> = v
            .stops
            .iter()
            .enumerate()
            .map(|(k, s)| OStop {
                link: s.link,
                pick: s.pickups.first().copied(),
                drop: s.dropoffs.first().copied(),
                orig: Some(k + 1),
            })
            .collect();
        let base_end = match (v.stops.back(), &v.task) {
            (Some(s), _) => s.departure,
            (None, Task::AtStop { stop }) => stop.departure,
            _ => NOW,
        };
        let n = base.len();
        for i in 0..=n {
            for j in i..=n {
                let mut seq = base.clone();
                seq.insert(
                    j,
                    OStop {
                        link: req.dest,
                        pick: None,
                        drop: Some(req.id),
                        orig: None,
                    },
                );
                seq.insert(
                    i,
                    OStop {
                        link: req.origin,
                        pick: Some(req.id),
                        drop: None,
                        orig: None,
                    },
                );
                let Some(times) = replay(inst, v, &seq) else { continue };
                // capacity
                let mut load = (v.onboard.len() + at_stop_pickups.len()) as u32;
                let mut ok = true;
                for s in &seq {
                    if s.drop.is_some() {
                        load -= 1;
                    }
                    if s.pick.is_some() {
                        load += 1;
                    }
                    ok &= load <= v.capacity;
                }
                if !ok {
                    continue;
                }
                let pick_t = |r: u32| -> Option<Time> {
                    seq.iter().zip(&times).find(|(s, _)| s.pick == Some(r)).map(|(_, t)| t.1)
                };
                let drop_t =
                    |r: u32| -> Time { seq.iter().zip(&times).find(|(s, _)| s.drop == Some(r)).unwrap().1 .0 };
                // every rider in the vehicle, new one included
                let mut extended = false;
                for s in &seq {
                    let Some(r) = s.drop else { continue };
                    let rq = &inst.requests[r as usize];
                    let pickup = match pick_t(r) {
                        Some(t) => {
                            if t - rq.submit_time > p.max_wait {
                                ok = false;
                            }
                            t
                        }
                        None => rq.pickup_time.unwrap(),
                    };
                    let ride = (drop_t(r) - pickup) as f64;
                    if r == req.id {
                        if ride > p.detour_factor * req.direct_time as f64 {
                            extended = true;
                            ok &= p.extended_detour;
                        }
                    } else if ride > rq.max_ride {
                        ok = false;
                    }
                }
                if !ok {
                    continue;
                }
                let delta = times.last().unwrap().1 - base_end;
                if best.is_none_or(|b| delta < b.delta) {
                    best = Some(Verdict {
                        vehicle: vi,
                        i,
                        j,
                        delta,
                        pickup: pick_t(req.id).unwrap(),
                        dropoff: drop_t(req.id),
                        extended,
                    });
                }
            }
        }
    }
    best
}

/// Result of one checked instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Infeasible,
    /// Inserted into an empty schedule.
    Feasible,
    /// Inserted next to committed stops.
    Shared,
}

/// Dispatches the new request of instance `seed` and compares the choice with
/// exhaustive enumeration, then checks the committed schedule. Panics on any
/// disagreement.
pub fn check(seed: u64) -> Outcome {
    let inst = random_instance(seed);
    let ctx = InsertionContext {
        net: &inst.net,
        skim: &inst.skim,
        params: &inst.params,
        ridesharing: inst.ridesharing,
    };
    let got = find_best_insertion(&ctx, &inst.vehicles, &inst.requests, &inst.new_req, NOW);
    let want = oracle(&inst);
    let got_v = got.map(|g| Verdict {
        vehicle: g.vehicle,
        i: g.pickup_idx,
        j: g.dropoff_idx,
        delta: g.delta_work,
        pickup: g.pickup_time,
        dropoff: g.dropoff_time,
        extended: g.extended,
    });
    assert_eq!(got_v, want, "seed {seed}");
    let Some(ins) = got else {
        return Outcome::Infeasible;
    };
    let shared = !inst.vehicles[ins.vehicle].stops.is_empty();

    // the committed schedule must reproduce the evaluated times
    let mut vehicles = inst.vehicles.clone();
    let mut requests = inst.requests.clone();
    let before = vehicles[ins.vehicle].clone();
    apply_insertion(&ctx, &mut vehicles[ins.vehicle], &mut requests, inst.new_req.id, &ins, NOW).unwrap();
    let after = &vehicles[ins.vehicle];
    let mut seq: Vec<OStop> = before
        .stops
        .iter()
        .enumerate()
        .map(|(k, s)| OStop {
            link: s.link,
            pick: None,
            drop: None,
            orig: Some(k + 1),
        })
        .collect();
    let d = OStop {
        link: inst.new_req.dest,
        pick: None,
        drop: Some(0),
        orig: None,
    };
    seq.insert(ins.dropoff_idx, d);
    seq.insert(
        ins.pickup_idx,
        OStop {
            link: inst.new_req.origin,
            pick: Some(0),
            drop: None,
            orig: None,
        },
    );
    let times = replay(&inst, &before, &seq).unwrap();
    assert_eq!(after.stops.len(), times.len(), "seed {seed}");
    for (s, &(arr, dep)) in after.stops.iter().zip(&times) {
        assert_eq!((s.arrival, s.departure), (arr, dep), "seed {seed}");
        assert_eq!(s.leg.end(), s.arrival, "seed {seed}");
        for w in s.leg.links.windows(2) {
            assert_eq!(inst.net.link(w[0]).to, inst.net.link(w[1]).from, "seed {seed}");
        }
        assert_eq!(s.leg.links.last().copied().unwrap_or(s.link), s.link, "seed {seed}");
    }
    assert_eq!(requests[inst.new_req.id as usize].status, RequestStatus::Scheduled);
    if shared {
        Outcome::Shared
    } else {
        Outcome::Feasible
    }
}
