//! Zone-based rebalancing of idle vehicles.
//!
//! Every interval, vehicles parked and empty for at least `min_idle` seconds
//! are moved from cells with surplus to cells whose expected demand over the
//! next `horizon` exceeds the idle vehicles already there. The transport plan
//! minimizes total beeline distance between cell centroids.

use serde::{Deserialize, Serialize};

use super::mcmf::MinCostFlow;
use super::schedule::SavVehicle;
use crate::mode::Mode;
use crate::network::{LinkIdx, Network};
use crate::Time;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RebalanceParams {
    pub enabled: bool,
    pub cell_size_m: f64,
    pub interval: Time,
    pub min_idle: Time,
    pub horizon: Time,
}

impl Default for RebalanceParams {
    fn default() -> Self {
        RebalanceParams {
            enabled: true,
            cell_size_m: 1000.0,
            interval: 300,
            min_idle: 600,
            horizon: 3600,
        }
    }
}

/// Square cells over the node bounding box. A link belongs to the cell of
/// its end node.
#[derive(Clone, Debug)]
pub struct Zoning {
    cols: usize,
    rows: usize,
    x0: f64,
    y0: f64,
    size: f64,
    link_cell: Vec<u32>,
    central: Vec<Option<LinkIdx>>,
}

impl Zoning {
    pub fn new(net: &Network, size: f64) -> Self {
        let (x0, y0, x1, y1) = net.bounds();
        let cols = (((x1 - x0) / size).floor() as usize + 1).max(1);
        let rows = (((y1 - y0) / size).floor() as usize + 1).max(1);
        let cell_of = |x: f64, y: f64| {
            let c = (((x - x0) / size).floor() as usize).min(cols - 1);
            let r = (((y - y0) / size).floor() as usize).min(rows - 1);
            (r * cols + c) as u32
        };
        let link_cell: Vec<u32> = net
            .link_indices()
            .map(|l| {
                let (x, y) = net.link_end(l);
                cell_of(x, y)
            })
            .collect();
        let mut z = Zoning {
            cols,
            rows,
            x0,
            y0,
            size,
            link_cell,
            central: vec![None; cols * rows],
        };
        let mut best = vec![f64::INFINITY; cols * rows];
        for l in net.link_indices() {
            if !net.link(l).allows(Mode::Sav) {
                continue;
            }
            let c = z.link_cell[l.index()] as usize;
            let (cx, cy) = z.centroid(c);
            let (x, y) = net.link_end(l);
            let d = (x - cx).hypot(y - cy);
            if d < best[c] {
                best[c] = d;
                z.central[c] = Some(l);
            }
        }
        z
    }

    pub fn num_cells(&self) -> usize {
        self.cols * self.rows
    }

    pub fn cell_of_link(&self, l: LinkIdx) -> usize {
        self.link_cell[l.index()] as usize
    }

    pub fn centroid(&self, cell: usize) -> (f64, f64) {
        let (c, r) = (cell % self.cols, cell / self.cols);
        (
            self.x0 + (c as f64 + 0.5) * self.size,
            self.y0 + (r as f64 + 0.5) * self.size,
        )
    }

    /// Link whose end node is closest to the cell centroid.
    pub fn central_link(&self, cell: usize) -> Option<LinkIdx> {
        self.central[cell]
    }

    /// Integer beeline distance between centroids, meters.
    pub fn cost(&self, a: usize, b: usize) -> i64 {
        let (ax, ay) = self.centroid(a);
        let (bx, by) = self.centroid(b);
        (ax - bx).hypot(ay - by).round() as i64
    }
}

/// Request submissions per cell, used as the demand forecast.
#[derive(Clone, Debug, Default)]
pub struct DemandEstimate {
    times: Vec<Vec<Time>>,
}

impl DemandEstimate {
    pub fn from_submissions(zoning: &Zoning, subs: impl IntoIterator<Item = (Time, LinkIdx)>) -> Self {
        let mut times = vec![Vec::new(); zoning.num_cells()];
        for (t, l) in subs {
            times[zoning.cell_of_link(l)].push(t);
        }
        for v in &mut times {
            v.sort_unstable();
        }
        DemandEstimate { times }
    }

    /// Submissions in `[from, to)`.
    pub fn count(&self, cell: usize, from: Time, to: Time) -> u32 {
        let Some(v) = self.times.get(cell) else { return 0 };
        (v.partition_point(|&t| t < to) - v.partition_point(|&t| t < from)) as u32
    }
}

/// Minimum-cost integral plan moving `min(sum supply, sum deficit)` vehicles.
/// Returns `flows[s][d]`.
pub fn transport_plan(supply: &[u32], deficit: &[u32], cost: impl Fn(usize, usize) -> i64) -> Vec<Vec<u32>> {
    let (ns, nd) = (supply.len(), deficit.len());
    let total = supply.iter().sum::<u32>().min(deficit.iter().sum());
    let mut flows = vec![vec![0; nd]; ns];
    if total == 0 {
        return flows;
    }
    let (src, sink) = (ns + nd, ns + nd + 1);
    let mut g = MinCostFlow::new(ns + nd + 2);
    for (s, &q) in supply.iter().enumerate() {
        if q > 0 {
            g.add_edge(src, s, q as i64, 0);
        }
    }
    for (d, &q) in deficit.iter().enumerate() {
        if q > 0 {
            g.add_edge(ns + d, sink, q as i64, 0);
        }
    }
    let mut arcs = Vec::new();
    for s in (0..ns).filter(|&s| supply[s] > 0) {
        for d in (0..nd).filter(|&d| deficit[d] > 0) {
            arcs.push((s, d, g.add_edge(s, ns + d, total as i64, cost(s, d))));
        }
    }
    let (flow, _) = g.solve(src, sink, total as i64);
    debug_assert_eq!(flow, total as i64);
    for (s, d, e) in arcs {
        flows[s][d] = g.flow(e) as u32;
    }
    flows
}

/// Relocation orders `(vehicle index, target link)` for this interval.
pub fn rebalance(
    zoning: &Zoning,
    vehicles: &[SavVehicle],
    estimate: &DemandEstimate,
    now: Time,
    params: &RebalanceParams,
) -> Vec<(usize, LinkIdx)> {
    let cells = zoning.num_cells();
    let mut idle: Vec<Vec<usize>> = vec![Vec::new(); cells];
    for (k, v) in vehicles.iter().enumerate() {
        if let Some((link, since)) = v.idle_since() {
            if v.onboard.is_empty() && now - since >= params.min_idle {
                idle[zoning.cell_of_link(link)].push(k);
            }
        }
    }
    for list in &mut idle {
        list.sort_by_key(|&k| vehicles[k].id);
    }
    let supply: Vec<u32> = idle.iter().map(|v| v.len() as u32).collect();
    let deficit: Vec<u32> = (0..cells)
        .map(|c| {
            if zoning.central_link(c).is_none() {
                return 0;
            }
            estimate.count(c, now, now + params.horizon).saturating_sub(supply[c])
        })
        .collect();
    let flows = transport_plan(&supply, &deficit, |a, b| zoning.cost(a, b));
    let mut orders = Vec::new();
    for (s, row) in flows.iter().enumerate() {
        let mut pool = idle[s].iter();
        for (d, &f) in row.iter().enumerate() {
            for _ in 0..f {
                let k = *pool.next().expect("flow bounded by supply");
                if d != s {
                    orders.push((k, zoning.central_link(d).expect("deficit cells have a central link")));
                }
            }
        }
    }
    orders
}
