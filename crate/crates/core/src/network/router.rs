use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{LinkIdx, Network, NodeIdx, TravelTimeProfile};
use crate::mode::Mode;

/// A route between two links. `links` excludes the origin link (the vehicle
/// starts at its downstream end) and includes the destination link.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub links: Vec<LinkIdx>,
    pub travel_time: f64,
    pub distance: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    time: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-dependent one-to-one router. Link costs are evaluated at link-entry
/// time; scratch buffers are reused across queries.
pub struct Router {
    arrival: Vec<f64>,
    pred: Vec<u32>,
    stamp: Vec<u32>,
    settled: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Entry>,
}

const NONE: u32 = u32::MAX;

impl Router {
    pub fn new(net: &Network) -> Self {
        let n = net.num_nodes();
        Router {
            arrival: vec![f64::INFINITY; n],
            pred: vec![NONE; n],
            stamp: vec![0; n],
            settled: vec![0; n],
            generation: 0,
            heap: BinaryHeap::new(),
        }
    }

    /// Minimal-travel-time path from the end of `origin` to the end of `dest`,
    /// or `None` when the destination is unreachable for `mode`.
    pub fn shortest_path(
        &mut self,
        net: &Network,
        profile: &TravelTimeProfile,
        origin: LinkIdx,
        dest: LinkIdx,
        depart: f64,
        mode: Mode,
    ) -> Option<Path> {
        if !net.link(origin).allows(mode) || !net.link(dest).allows(mode) {
            return None;
        }
        if origin == dest {
            return Some(Path {
                links: Vec::new(),
                travel_time: 0.0,
                distance: 0.0,
            });
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.settled.fill(0);
            self.generation = 1;
        }
        let g = self.generation;
        let source = net.link(origin).to;
        let target = net.link(dest).from;
        self.heap.clear();
        self.touch(source, depart, NONE);
        self.heap.push(Entry {
            time: depart,
            node: source.0,
        });

        let mut reached = false;
        while let Some(Entry { time, node }) = self.heap.pop() {
            let u = node as usize;
            if self.settled[u] == g {
                continue;
            }
            self.settled[u] = g;
            if node == target.0 {
                reached = true;
                break;
            }
            for &l in net.out_links(NodeIdx(node)) {
                let link = net.link(l);
                if !link.allows(mode) {
                    continue;
                }
                let v = link.to.index();
                if self.settled[v] == g {
                    continue;
                }
                let t = time + profile.travel_time(l, time);
                if self.stamp[v] != g || t < self.arrival[v] {
                    self.touch(link.to, t, l.0);
                    self.heap.push(Entry {
                        time: t,
                        node: v as u32,
                    });
                }
            }
        }
        if !reached {
            return None;
        }

        let mut links = vec![dest];
        let mut node = target.index();
        while self.pred[node] != NONE {
            let l = LinkIdx(self.pred[node]);
            links.push(l);
            node = net.link(l).from.index();
        }
        links.reverse();
        let at_target = self.arrival[target.index()];
        let travel_time = at_target + profile.travel_time(dest, at_target) - depart;
        let distance = links.iter().map(|&l| net.link(l).length).sum();
        Some(Path {
            links,
            travel_time,
            distance,
        })
    }

    fn touch(&mut self, node: NodeIdx, t: f64, pred: u32) {
        let u = node.index();
        self.stamp[u] = self.generation;
        self.arrival[u] = t;
        self.pred[u] = pred;
    }
}
