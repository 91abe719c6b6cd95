use std::collections::VecDeque;

use crate::network::{LinkIdx, Network, Skim, SkimRow};
use crate::Time;

/// A timed drive over consecutive links. The vehicle enters `links[0]` at
/// `start` and leaves `links[k]` at `exits[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Route {
    pub start: Time,
    pub links: Vec<LinkIdx>,
    pub exits: Vec<Time>,
}

impl Route {
    pub fn empty(start: Time) -> Self {
        Route {
            start,
            links: Vec::new(),
            exits: Vec::new(),
        }
    }

    /// Times each link with the snapshot's link times.
    pub fn timed(start: Time, links: Vec<LinkIdx>, skim: &Skim) -> Self {
        let mut t = start;
        let exits = links
            .iter()
            .map(|&l| {
                t += skim.link_time(l);
                t
            })
            .collect();
        Route { start, links, exits }
    }

    /// Shortest route from the end of `from` to the end of `to`, using a forward row anchored at `from`.
    pub fn plan(net: &Network, skim: &Skim, row: &SkimRow, to: LinkIdx, start: Time) -> Option<Self> {
        skim.path(net, row, to).map(|links| Route::timed(start, links, skim))
    }

    pub fn end(&self) -> Time {
        self.exits.last().copied().unwrap_or(self.start)
    }

    pub fn shift(&mut self, delta: Time) {
        self.start += delta;
        for e in &mut self.exits {
            *e += delta;
        }
    }

    pub fn distance(&self, net: &Network) -> f64 {
        self.links.iter().map(|&l| net.link(l).length).sum()
    }
}

/// A planned halt serving pickups and dropoffs. Dropoffs happen on arrival,
/// pickups on departure.
#[derive(Clone, Debug, PartialEq)]
pub struct Stop {
    pub link: LinkIdx,
    pub arrival: Time,
    pub departure: Time,
    pub pickups: Vec<u32>,
    pub dropoffs: Vec<u32>,
    /// Drive from the previous schedule point to this stop; ends at `arrival`.
    pub leg: Route,
}

impl Stop {
    pub fn shift(&mut self, delta: Time) {
        self.arrival += delta;
        self.departure += delta;
        self.leg.shift(delta);
    }
}

/// What the vehicle is doing right now.
#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    /// Parked and empty.
    Stay { link: LinkIdx, since: Time },
    /// Driving `stops[0].leg`, currently on `leg.links[pos]`.
    ToStop { pos: usize },
    /// Empty relocation drive, currently on `route.links[pos]`.
    Relocate { route: Route, pos: usize },
    /// Serving a stop until its departure time.
    AtStop { stop: Stop },
}

/// A capacity-constrained fleet vehicle and its committed schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct SavVehicle {
    pub id: u32,
    pub capacity: u32,
    pub depot: LinkIdx,
    pub task: Task,
    pub stops: VecDeque<Stop>,
    /// Requests currently on board.
    pub onboard: Vec<u32>,
}

impl SavVehicle {
    pub fn new(id: u32, capacity: u32, depot: LinkIdx, now: Time) -> Self {
        SavVehicle {
            id,
            capacity,
            depot,
            task: Task::Stay {
                link: depot,
                since: now,
            },
            stops: VecDeque::new(),
            onboard: Vec::new(),
        }
    }

    /// Earliest point where the schedule may be changed: the link the vehicle
    /// is on (or will next be free at) and the time it gets there.
    pub fn divert_point(&self, now: Time) -> (LinkIdx, Time) {
        match &self.task {
            Task::Stay { link, .. } => (*link, now),
            Task::ToStop { pos } => {
                let leg = &self.stops[0].leg;
                (leg.links[*pos], leg.exits[*pos])
            }
            Task::Relocate { route, pos } => (route.links[*pos], route.exits[*pos]),
            Task::AtStop { stop } => (stop.link, stop.departure),
        }
    }

    /// Passengers aboard when leaving the divert point.
    pub fn load_at_divert_point(&self) -> u32 {
        let extra = match &self.task {
            Task::AtStop { stop } => stop.pickups.len(),
            _ => 0,
        };
        (self.onboard.len() + extra) as u32
    }

    /// Whether the vehicle has no passengers and nothing scheduled.
    pub fn is_unassigned(&self) -> bool {
        self.stops.is_empty() && self.onboard.is_empty() && !matches!(self.task, Task::AtStop { .. })
    }

    /// Idle: parked, empty, and stationary since the given time.
    pub fn idle_since(&self) -> Option<(LinkIdx, Time)> {
        match self.task {
            Task::Stay { link, since } if self.stops.is_empty() => Some((link, since)),
            _ => None,
        }
    }

    /// End of the last request-serving task, if any remain.
    pub fn work_end(&self) -> Option<Time> {
        match (self.stops.back(), &self.task) {
            (Some(s), _) => Some(s.departure),
            (None, Task::AtStop { stop }) => Some(stop.departure),
            _ => None,
        }
    }
}
