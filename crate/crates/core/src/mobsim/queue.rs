use std::collections::{BTreeSet, VecDeque};

use crate::events::{Event, EventKind, VehicleRef};
use crate::network::{LinkIdx, Network, VEHICLE_SPACE_M};
use crate::Time;

/// FIFO buffer of one link. A vehicle may leave once its earliest exit time
/// has passed, the outflow budget allows it, and the next link has room.
#[derive(Debug)]
struct LinkQueue {
    buffer: VecDeque<(u32, Time)>,
    /// Cars that start a trip at the end of this link, waiting to enter their first link.
    departures: VecDeque<u32>,
    occupancy: u32,
    storage: u32,
    /// Seconds between consecutive exits at full flow.
    headway: f64,
    /// Earliest time the outflow budget admits the next exit.
    next_free: f64,
    free_flow: Time,
    /// Upstream links whose head vehicle is waiting for space here.
    blocked: Vec<u32>,
}

#[derive(Debug, Default, Clone)]
struct Car {
    route: Vec<LinkIdx>,
    pos: usize,
}

/// Queue-based traffic flow for private cars.
#[derive(Debug)]
pub(super) struct Traffic {
    links: Vec<LinkQueue>,
    cars: Vec<Car>,
    wake: BTreeSet<(Time, u32)>,
}

impl Traffic {
    /// Flow and storage capacities are scaled by `sample_rate`.
    pub fn new(net: &Network, sample_rate: f64, num_persons: usize) -> Self {
        let links = net
            .links()
            .iter()
            .map(|l| {
                let storage = ((l.length * l.lanes as f64 / VEHICLE_SPACE_M * sample_rate).floor() as u32).max(1);
                let flow = (l.capacity_vph * sample_rate).max(f64::MIN_POSITIVE);
                LinkQueue {
                    buffer: VecDeque::new(),
                    departures: VecDeque::new(),
                    occupancy: 0,
                    storage,
                    headway: 3600.0 / flow,
                    next_free: f64::NEG_INFINITY,
                    free_flow: (l.free_flow_time().ceil() as Time).max(1),
                    blocked: Vec::new(),
                }
            })
            .collect();
        Traffic {
            links,
            cars: vec![Car::default(); num_persons],
            wake: BTreeSet::new(),
        }
    }

    pub fn next_wake(&self) -> Option<Time> {
        self.wake.first().map(|w| w.0)
    }

    /// Puts a car on the departure list of `origin`; `route` must be non-empty.
    pub fn depart(&mut self, person: u32, origin: LinkIdx, route: Vec<LinkIdx>, now: Time) {
        debug_assert!(!route.is_empty());
        self.cars[person as usize] = Car { route, pos: 0 };
        self.links[origin.index()].departures.push_back(person);
        self.wake.insert((now, origin.0));
    }

    /// Moves every car that can move at `now`. Persons whose car left its
    /// destination link are appended to `arrivals`.
    pub fn step(&mut self, now: Time, ev: &mut Vec<Event>, arrivals: &mut Vec<u32>) {
        while let Some(&(t, l)) = self.wake.first() {
            if t > now {
                break;
            }
            self.wake.pop_first();
            self.process(l, now, ev, arrivals);
        }
    }

    fn process(&mut self, l: u32, now: Time, ev: &mut Vec<Event>, arrivals: &mut Vec<u32>) {
        let li = l as usize;
        while let Some(&(car, earliest)) = self.links[li].buffer.front() {
            if earliest > now {
                self.wake.insert((earliest, l));
                break;
            }
            let next_free = self.links[li].next_free;
            if (now as f64) < next_free {
                self.wake.insert((next_free.ceil() as Time, l));
                break;
            }
            let c = &self.cars[car as usize];
            if c.pos + 1 == c.route.len() {
                self.leave(l, now, ev);
                arrivals.push(car);
                continue;
            }
            let next = c.route[c.pos + 1];
            if self.is_full(next) {
                self.links[next.index()].blocked.push(l);
                break;
            }
            self.leave(l, now, ev);
            self.enter(next, car, self.cars[car as usize].pos + 1, now, ev);
        }
        while let Some(&car) = self.links[li].departures.front() {
            let first = self.cars[car as usize].route[0];
            if self.is_full(first) {
                self.links[first.index()].blocked.push(l);
                break;
            }
            self.links[li].departures.pop_front();
            self.enter(first, car, 0, now, ev);
        }
    }

    fn is_full(&self, l: LinkIdx) -> bool {
        let q = &self.links[l.index()];
        q.occupancy >= q.storage
    }

    fn leave(&mut self, l: u32, now: Time, ev: &mut Vec<Event>) {
        let q = &mut self.links[l as usize];
        let (car, _) = q.buffer.pop_front().expect("leave from non-empty buffer");
        q.occupancy -= 1;
        q.next_free = q.next_free.max(now as f64) + q.headway;
        ev.push(
            Event::new(now, EventKind::LinkLeave)
                .person(car)
                .vehicle(VehicleRef::Car(car))
                .link(LinkIdx(l)),
        );
        for b in std::mem::take(&mut q.blocked) {
            self.wake.insert((now, b));
        }
    }

    fn enter(&mut self, l: LinkIdx, car: u32, pos: usize, now: Time, ev: &mut Vec<Event>) {
        self.cars[car as usize].pos = pos;
        let q = &mut self.links[l.index()];
        q.occupancy += 1;
        let exit = now + q.free_flow;
        q.buffer.push_back((car, exit));
        if q.buffer.len() == 1 {
            self.wake.insert((exit, l.0));
        }
        ev.push(
            Event::new(now, EventKind::LinkEnter)
                .person(car)
                .vehicle(VehicleRef::Car(car))
                .link(l),
        );
    }

    /// Link a car is currently on, if it is in traffic.
    pub fn location(&self, person: u32) -> Option<LinkIdx> {
        self.links.iter().enumerate().find_map(|(k, q)| {
            q.buffer
                .iter()
                .any(|&(c, _)| c == person)
                .then_some(LinkIdx(k as u32))
        })
    }
}
