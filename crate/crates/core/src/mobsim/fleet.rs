use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::events::{Attrs, Event, EventKind, TaskKind, VehicleRef};
use crate::network::{LinkIdx, Network, Skim};
use crate::savfleet::{apply_insertion, Insertion, InsertionContext, Request, Route, SavVehicle, Task};
use crate::Time;

/// Fleet vehicles driven by their schedules. Vehicles do not occupy car
/// queues; they traverse each link in exactly the planned time.
pub(super) struct FleetSim {
    pub vehicles: Vec<SavVehicle>,
    pub requests: Vec<Request>,
    wake: BTreeSet<(Time, u32)>,
    due: Vec<Option<Time>>,
}

fn task_event(now: Time, kind: EventKind, id: u32, task: TaskKind) -> Event {
    Event::new(now, kind)
        .vehicle(VehicleRef::Sav(id))
        .attrs(Attrs::Task(task))
}

fn link_event(now: Time, kind: EventKind, id: u32, l: LinkIdx) -> Event {
    Event::new(now, kind).vehicle(VehicleRef::Sav(id)).link(l)
}

fn invariant(v: &SavVehicle, msg: String) -> Error {
    Error::Invariant(format!("vehicle sav_{}: {msg}", v.id))
}

impl FleetSim {
    pub fn new(vehicles: Vec<SavVehicle>, now: Time, ev: &mut Vec<Event>) -> Self {
        for v in &vehicles {
            if let Task::Stay { link, .. } = v.task {
                ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Stay).link(link));
            }
        }
        let n = vehicles.len();
        let mut fleet = FleetSim {
            vehicles,
            requests: Vec::new(),
            wake: BTreeSet::new(),
            due: vec![None; n],
        };
        for k in 0..n {
            fleet.reschedule(k);
        }
        fleet
    }

    pub fn next_wake(&self) -> Option<Time> {
        self.wake.first().map(|w| w.0)
    }

    fn reschedule(&mut self, k: usize) {
        if let Some(t) = self.due[k].take() {
            self.wake.remove(&(t, k as u32));
        }
        let v = &self.vehicles[k];
        let next = match &v.task {
            Task::Stay { .. } => None,
            Task::ToStop { pos } => Some(v.stops[0].leg.exits[*pos]),
            Task::Relocate { route, pos } => Some(route.exits[*pos]),
            Task::AtStop { stop } => Some(stop.departure),
        };
        if let Some(t) = next {
            self.wake.insert((t, k as u32));
            self.due[k] = Some(t);
        }
    }

    /// Performs every task transition due at `now`. Dropped-off requests are
    /// appended to `arrivals`.
    pub fn step(&mut self, now: Time, ev: &mut Vec<Event>, arrivals: &mut Vec<u32>) -> Result<()> {
        while let Some(&(t, k)) = self.wake.first() {
            if t > now {
                break;
            }
            self.wake.pop_first();
            self.due[k as usize] = None;
            if t < now {
                return Err(invariant(&self.vehicles[k as usize], format!("transition at {t} missed")));
            }
            advance(&mut self.vehicles[k as usize], &mut self.requests, now, ev, arrivals)?;
            self.reschedule(k as usize);
        }
        Ok(())
    }

    /// Commits a dispatcher decision and starts a parked vehicle.
    pub fn commit(
        &mut self,
        ctx: &InsertionContext,
        req: u32,
        ins: &Insertion,
        now: Time,
        ev: &mut Vec<Event>,
        arrivals: &mut Vec<u32>,
    ) -> Result<()> {
        let k = ins.vehicle;
        let v = &mut self.vehicles[k];
        let parked = matches!(v.task, Task::Stay { .. });
        let relocating = matches!(v.task, Task::Relocate { .. });
        apply_insertion(ctx, v, &mut self.requests, req, ins, now).map_err(|e| invariant(v, e.to_string()))?;
        if relocating {
            ev.push(task_event(now, EventKind::TaskEnd, v.id, TaskKind::Relocate));
            ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Drive));
        }
        if parked {
            ev.push(task_event(now, EventKind::TaskEnd, v.id, TaskKind::Stay));
            begin_leg(v, &mut self.requests, now, ev, arrivals)?;
            // an empty pickup leg may reach a stop that departs immediately
            advance(v, &mut self.requests, now, ev, arrivals)?;
        }
        self.reschedule(k);
        Ok(())
    }

    /// Sends parked vehicles to the given links, skipping no-op or unreachable orders.
    pub fn relocate(&mut self, net: &Network, skim: &Skim, orders: &[(usize, LinkIdx)], now: Time, ev: &mut Vec<Event>) {
        for &(k, target) in orders {
            let v = &mut self.vehicles[k];
            let Some((link, _)) = v.idle_since() else { continue };
            if link == target {
                continue;
            }
            let row = skim.forward(net, link);
            let Some(route) = Route::plan(net, skim, &row, target, now) else { continue };
            if route.links.is_empty() {
                continue;
            }
            ev.push(task_event(now, EventKind::TaskEnd, v.id, TaskKind::Stay));
            ev.push(link_event(now, EventKind::RelocationStart, v.id, target));
            ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Relocate));
            ev.push(link_event(now, EventKind::LinkEnter, v.id, route.links[0]));
            v.task = Task::Relocate { route, pos: 0 };
            self.reschedule(k);
        }
    }
}

/// Runs the vehicle's transitions due at `now` until it waits for a later time.
fn advance(v: &mut SavVehicle, requests: &mut [Request], now: Time, ev: &mut Vec<Event>, arrivals: &mut Vec<u32>) -> Result<()> {
    loop {
        match &mut v.task {
            Task::Stay { .. } => return Ok(()),
            Task::ToStop { pos } => {
                let leg = &v.stops[0].leg;
                let p = *pos;
                if leg.exits[p] != now {
                    return Ok(());
                }
                let (left, next) = (leg.links[p], leg.links.get(p + 1).copied());
                ev.push(link_event(now, EventKind::LinkLeave, v.id, left));
                match next {
                    Some(l) => {
                        ev.push(link_event(now, EventKind::LinkEnter, v.id, l));
                        v.task = Task::ToStop { pos: p + 1 };
                    }
                    None => {
                        ev.push(task_event(now, EventKind::TaskEnd, v.id, TaskKind::Drive));
                        arrive(v, requests, now, ev, arrivals)?;
                    }
                }
            }
            Task::Relocate { route, pos } => {
                let p = *pos;
                if route.exits[p] != now {
                    return Ok(());
                }
                let (left, next) = (route.links[p], route.links.get(p + 1).copied());
                ev.push(link_event(now, EventKind::LinkLeave, v.id, left));
                match next {
                    Some(l) => {
                        ev.push(link_event(now, EventKind::LinkEnter, v.id, l));
                        *pos = p + 1;
                    }
                    None => {
                        ev.push(task_event(now, EventKind::TaskEnd, v.id, TaskKind::Relocate));
                        ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Stay).link(left));
                        v.task = Task::Stay { link: left, since: now };
                    }
                }
            }
            Task::AtStop { stop } => {
                if stop.departure != now {
                    return Ok(());
                }
                let Task::AtStop { stop } = std::mem::replace(&mut v.task, Task::ToStop { pos: 0 }) else {
                    unreachable!()
                };
                for &r in &stop.pickups {
                    let req = &mut requests[r as usize];
                    req.pick_up(now).map_err(|e| invariant(v, e.to_string()))?;
                    ev.push(
                        link_event(now, EventKind::PassengerPickup, v.id, stop.link)
                            .person(req.person)
                            .request(r),
                    );
                    v.onboard.push(r);
                }
                if v.onboard.len() > v.capacity as usize {
                    return Err(invariant(v, format!("{} aboard exceeds capacity {}", v.onboard.len(), v.capacity)));
                }
                ev.push(task_event(now, EventKind::TaskEnd, v.id, TaskKind::Stop));
                if v.stops.is_empty() {
                    ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Stay).link(stop.link));
                    v.task = Task::Stay {
                        link: stop.link,
                        since: now,
                    };
                } else {
                    begin_leg(v, requests, now, ev, arrivals)?;
                }
            }
        }
    }
}

/// Starts driving towards `stops[0]`, arriving at once if it is on the current link.
fn begin_leg(v: &mut SavVehicle, requests: &mut [Request], now: Time, ev: &mut Vec<Event>, arrivals: &mut Vec<u32>) -> Result<()> {
    let leg = &v.stops[0].leg;
    if leg.start != now {
        return Err(invariant(v, format!("leg planned for {} started at {now}", leg.start)));
    }
    match leg.links.first() {
        None => arrive(v, requests, now, ev, arrivals),
        Some(&l) => {
            ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Drive));
            ev.push(link_event(now, EventKind::LinkEnter, v.id, l));
            v.task = Task::ToStop { pos: 0 };
            Ok(())
        }
    }
}

fn arrive(v: &mut SavVehicle, requests: &mut [Request], now: Time, ev: &mut Vec<Event>, arrivals: &mut Vec<u32>) -> Result<()> {
    let stop = v.stops.pop_front().expect("arrival with a scheduled stop");
    if stop.arrival != now {
        return Err(invariant(v, format!("stop planned at {} reached at {now}", stop.arrival)));
    }
    ev.push(task_event(now, EventKind::TaskStart, v.id, TaskKind::Stop).link(stop.link));
    for &r in &stop.dropoffs {
        let req = &mut requests[r as usize];
        req.complete(now).map_err(|e| invariant(v, e.to_string()))?;
        ev.push(
            link_event(now, EventKind::PassengerDropoff, v.id, stop.link)
                .person(req.person)
                .request(r),
        );
        v.onboard.retain(|&x| x != r);
        arrivals.push(r);
    }
    v.task = Task::AtStop { stop };
    Ok(())
}
