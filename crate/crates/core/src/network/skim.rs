use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{LinkIdx, Network, NodeIdx, TravelTimeProfile};
use crate::mode::Mode;

const UNREACHED: i64 = i64::MAX;
const NO_PRED: u32 = u32::MAX;

/// Static, whole-second snapshot of a travel-time profile at one instant.
///
/// Dispatch decisions evaluate every leg against the snapshot taken at
/// decision time, so leg durations are exact integers and a leg planned
/// from a snapshot is driven in exactly the planned time.
#[derive(Clone, Debug)]
pub struct Skim {
    link_tt: Vec<i64>,
    mode: Mode,
}

/// One-to-all (forward) or all-to-one (backward) node times over a [`Skim`].
#[derive(Clone, Debug)]
pub struct SkimRow {
    anchor: LinkIdx,
    forward: bool,
    time: Vec<i64>,
    pred: Vec<u32>,
}

impl Skim {
    pub fn from_profile(net: &Network, profile: &TravelTimeProfile, t: f64, mode: Mode) -> Self {
        let bin = profile.bin_of(t);
        let link_tt = net
            .link_indices()
            .map(|l| (profile.bin_time(l, bin).ceil() as i64).max(1))
            .collect();
        Skim { link_tt, mode }
    }

    /// Snapshot with explicit link times; used by tests and small demos.
    pub fn from_link_times(link_tt: Vec<i64>, mode: Mode) -> Self {
        Skim { link_tt, mode }
    }

    #[inline]
    pub fn link_time(&self, l: LinkIdx) -> i64 {
        self.link_tt[l.index()]
    }

    /// Times from the end of `origin` to every node.
    pub fn forward(&self, net: &Network, origin: LinkIdx) -> SkimRow {
        self.search(net, origin, true)
    }

    /// Times from every node to the start of `dest`.
    pub fn backward(&self, net: &Network, dest: LinkIdx) -> SkimRow {
        self.search(net, dest, false)
    }

    fn search(&self, net: &Network, anchor: LinkIdx, forward: bool) -> SkimRow {
        let n = net.num_nodes();
        let mut time = vec![UNREACHED; n];
        let mut pred = vec![NO_PRED; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let start = if forward {
            net.link(anchor).to
        } else {
            net.link(anchor).from
        };
        time[start.index()] = 0;
        heap.push(Reverse((0i64, start.0)));
        while let Some(Reverse((t, u))) = heap.pop() {
            if done[u as usize] {
                continue;
            }
            done[u as usize] = true;
            let adj = if forward {
                net.out_links(NodeIdx(u))
            } else {
                net.in_links(NodeIdx(u))
            };
            for &l in adj {
                let link = net.link(l);
                if !link.allows(self.mode) {
                    continue;
                }
                let v = if forward { link.to } else { link.from }.index();
                let nt = t + self.link_tt[l.index()];
                if nt < time[v] {
                    time[v] = nt;
                    pred[v] = l.0;
                    heap.push(Reverse((nt, v as u32)));
                }
            }
        }
        SkimRow {
            anchor,
            forward,
            time,
            pred,
        }
    }

    /// Drive time between two links using a row anchored at either end.
    /// `None` when unreachable.
    #[inline]
    pub fn leg_time(&self, net: &Network, row: &SkimRow, from: LinkIdx, to: LinkIdx) -> Option<i64> {
        if from == to {
            return Some(0);
        }
        if !net.link(to).allows(self.mode) {
            return None;
        }
        let node = if row.forward {
            debug_assert_eq!(row.anchor, from);
            net.link(to).from
        } else {
            debug_assert_eq!(row.anchor, to);
            net.link(from).to
        };
        match row.time[node.index()] {
            UNREACHED => None,
            t => Some(t + self.link_tt[to.index()]),
        }
    }

    /// Path of links (excluding `from`, including `to`) from a forward row.
    pub fn path(&self, net: &Network, row: &SkimRow, to: LinkIdx) -> Option<Vec<LinkIdx>> {
        debug_assert!(row.forward);
        if row.anchor == to {
            return Some(Vec::new());
        }
        let mut node = net.link(to).from;
        if row.time[node.index()] == UNREACHED {
            return None;
        }
        let mut links = vec![to];
        while row.pred[node.index()] != NO_PRED {
            let l = LinkIdx(row.pred[node.index()]);
            links.push(l);
            node = net.link(l).from;
        }
        links.reverse();
        Some(links)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{grid_city, GridSpec, Router};

    #[test]
    fn forward_and_backward_agree_with_router_on_static_profile() {
        let net = grid_city(&GridSpec {
            size: 5,
            ..GridSpec::default()
        });
        let profile = TravelTimeProfile::free_flow(&net, 900.0, 3600.0);
        let skim = Skim::from_profile(&net, &profile, 0.0, Mode::Sav);
        // integer-valued profile so the router and the snapshot coincide
        let mut p2 = profile.clone();
        for l in net.link_indices() {
            p2.set(l, 0, skim.link_time(l) as f64);
        }
        let mut router = Router::new(&net);
        for a in (0..net.num_links() as u32).step_by(7).map(LinkIdx) {
            let fwd = skim.forward(&net, a);
            for b in (0..net.num_links() as u32).step_by(5).map(LinkIdx) {
                let bwd = skim.backward(&net, b);
                let t1 = skim.leg_time(&net, &fwd, a, b).unwrap();
                let t2 = skim.leg_time(&net, &bwd, a, b).unwrap();
                assert_eq!(t1, t2);
                let r = router.shortest_path(&net, &p2, a, b, 0.0, Mode::Sav).unwrap();
                assert_eq!(t1 as f64, r.travel_time);
                let path = skim.path(&net, &fwd, b).unwrap();
                let sum: i64 = path.iter().map(|&l| skim.link_time(l)).sum();
                assert_eq!(sum, t1);
            }
        }
    }
}
