//! Directed road network, travel-time profiles and routing.

mod grid;
mod io;
mod profile;
mod router;
mod skim;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use grid::{grid_city, GridSpec};
pub use io::{read_network, write_network};
pub use profile::{update_travel_times, TravelTimeProfile};
pub use router::{Path, Router};
pub use skim::{Skim, SkimRow};

use crate::mode::Mode;

/// Effective road length occupied by one queued vehicle, in meters.
pub const VEHICLE_SPACE_M: f64 = 7.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeIdx(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkIdx(pub u32);

impl NodeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LinkIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Link attributes as read from input, before node references are resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub free_speed_ms: f64,
    pub capacity_vph: f64,
    pub lanes: u32,
    pub car: bool,
    pub sav: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub id: String,
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub length: f64,
    pub free_speed: f64,
    pub capacity_vph: f64,
    pub lanes: u32,
    pub car: bool,
    pub sav: bool,
}

impl Link {
    pub fn allows(&self, mode: Mode) -> bool {
        match mode {
            Mode::Car => self.car,
            Mode::Sav => self.sav,
            Mode::Pt | Mode::Walk => true,
        }
    }

    pub fn free_flow_time(&self) -> f64 {
        self.length / self.free_speed
    }

    /// Queue storage in vehicles, before any sample-rate scaling.
    pub fn storage_capacity(&self) -> u32 {
        ((self.length * self.lanes as f64 / VEHICLE_SPACE_M).floor() as u32).max(1)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NetworkError {
    #[error("link '{link}' references unknown node '{node}'")]
    DanglingNode { link: String, node: String },
    #[error("link '{link}': {field} must be positive, got {value}")]
    NonPositive {
        link: String,
        field: &'static str,
        value: f64,
    },
    #[error("duplicate {kind} id '{id}'")]
    Duplicate { kind: &'static str, id: String },
    #[error("unknown link '{0}'")]
    UnknownLink(String),
}

/// Validated road graph with adjacency indices.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    out_links: Vec<Vec<LinkIdx>>,
    in_links: Vec<Vec<LinkIdx>>,
    link_by_id: HashMap<String, LinkIdx>,
}

pub fn build_network(nodes: Vec<Node>, links: Vec<LinkSpec>) -> Result<Network, NetworkError> {
    let mut node_by_id = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        if node_by_id.insert(n.id.clone(), NodeIdx(i as u32)).is_some() {
            return Err(NetworkError::Duplicate {
                kind: "node",
                id: n.id.clone(),
            });
        }
    }

    let mut built = Vec::with_capacity(links.len());
    let mut link_by_id = HashMap::with_capacity(links.len());
    for spec in links {
        let resolve = |id: &str| {
            node_by_id
                .get(id)
                .copied()
                .ok_or_else(|| NetworkError::DanglingNode {
                    link: spec.id.clone(),
                    node: id.to_string(),
                })
        };
        let from = resolve(&spec.from)?;
        let to = resolve(&spec.to)?;
        for (field, value) in [
            ("length", spec.length_m),
            ("free_speed", spec.free_speed_ms),
            ("capacity", spec.capacity_vph),
            ("lanes", spec.lanes as f64),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(NetworkError::NonPositive {
                    link: spec.id.clone(),
                    field,
                    value,
                });
            }
        }
        let idx = LinkIdx(built.len() as u32);
        if link_by_id.insert(spec.id.clone(), idx).is_some() {
            return Err(NetworkError::Duplicate {
                kind: "link",
                id: spec.id,
            });
        }
        built.push(Link {
            id: spec.id,
            from,
            to,
            length: spec.length_m,
            free_speed: spec.free_speed_ms,
            capacity_vph: spec.capacity_vph,
            lanes: spec.lanes,
            car: spec.car,
            sav: spec.sav,
        });
    }

    let mut out_links = vec![Vec::new(); nodes.len()];
    let mut in_links = vec![Vec::new(); nodes.len()];
    for (i, l) in built.iter().enumerate() {
        out_links[l.from.index()].push(LinkIdx(i as u32));
        in_links[l.to.index()].push(LinkIdx(i as u32));
    }

    Ok(Network {
        nodes,
        links: built,
        out_links,
        in_links,
        link_by_id,
    })
}

impl Network {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    #[inline]
    pub fn link(&self, idx: LinkIdx) -> &Link {
        &self.links[idx.index()]
    }

    #[inline]
    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.index()]
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn out_links(&self, node: NodeIdx) -> &[LinkIdx] {
        &self.out_links[node.index()]
    }

    #[inline]
    pub fn in_links(&self, node: NodeIdx) -> &[LinkIdx] {
        &self.in_links[node.index()]
    }

    pub fn link_idx(&self, id: &str) -> Result<LinkIdx, NetworkError> {
        self.link_by_id
            .get(id)
            .copied()
            .ok_or_else(|| NetworkError::UnknownLink(id.to_string()))
    }

    pub fn link_indices(&self) -> impl Iterator<Item = LinkIdx> {
        (0..self.links.len() as u32).map(LinkIdx)
    }

    /// Midpoint of a link, used as the coordinate of activities located on it.
    pub fn link_coord(&self, idx: LinkIdx) -> (f64, f64) {
        let l = self.link(idx);
        let a = self.node(l.from);
        let b = self.node(l.to);
        ((a.x + b.x) * 0.5, (a.y + b.y) * 0.5)
    }

    /// Coordinate of a link's downstream node, where a vehicle on it waits.
    pub fn link_end(&self, idx: LinkIdx) -> (f64, f64) {
        let n = self.node(self.link(idx).to);
        (n.x, n.y)
    }

    pub fn beeline(&self, a: LinkIdx, b: LinkIdx) -> f64 {
        let (ax, ay) = self.link_coord(a);
        let (bx, by) = self.link_coord(b);
        (ax - bx).hypot(ay - by)
    }

    /// Bounding box of all nodes as (min_x, min_y, max_x, max_y).
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.nodes.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), n| (a.min(n.x), b.min(n.y), c.max(n.x), d.max(n.y)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, x: f64, y: f64) -> Node {
        Node {
            id: id.into(),
            x,
            y,
        }
    }

    pub(crate) fn spec(id: &str, from: &str, to: &str, length: f64, lanes: u32) -> LinkSpec {
        LinkSpec {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length_m: length,
            free_speed_ms: 10.0,
            capacity_vph: 1000.0,
            lanes,
            car: true,
            sav: true,
        }
    }

    #[test]
    fn storage_of_100m_single_lane_is_13() {
        let net = build_network(
            vec![node("A", 0.0, 0.0), node("B", 100.0, 0.0)],
            vec![spec("l", "A", "B", 100.0, 1)],
        )
        .unwrap();
        assert_eq!(net.link(LinkIdx(0)).storage_capacity(), 13);
    }

    #[test]
    fn short_link_still_stores_one_vehicle() {
        let net = build_network(
            vec![node("A", 0.0, 0.0), node("B", 5.0, 0.0)],
            vec![spec("l", "A", "B", 5.0, 1)],
        )
        .unwrap();
        assert_eq!(net.link(LinkIdx(0)).storage_capacity(), 1);
    }

    #[test]
    fn dangling_node_is_rejected() {
        let err = build_network(
            vec![node("A", 0.0, 0.0)],
            vec![spec("l", "A", "Z", 100.0, 1)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            NetworkError::DanglingNode {
                link: "l".into(),
                node: "Z".into()
            }
        );
    }

    #[test]
    fn nonpositive_attributes_are_rejected() {
        let nodes = vec![node("A", 0.0, 0.0), node("B", 1.0, 0.0)];
        let mut s = spec("l", "A", "B", 0.0, 1);
        assert!(matches!(
            build_network(nodes.clone(), vec![s.clone()]),
            Err(NetworkError::NonPositive { field: "length", .. })
        ));
        s.length_m = 10.0;
        s.free_speed_ms = -1.0;
        assert!(matches!(
            build_network(nodes.clone(), vec![s.clone()]),
            Err(NetworkError::NonPositive { field: "free_speed", .. })
        ));
        s.free_speed_ms = 1.0;
        s.capacity_vph = 0.0;
        assert!(build_network(nodes, vec![s]).is_err());
    }

    #[test]
    fn adjacency_is_indexed() {
        let net = build_network(
            vec![node("A", 0.0, 0.0), node("B", 1.0, 0.0), node("C", 2.0, 0.0)],
            vec![
                spec("ab", "A", "B", 10.0, 1),
                spec("bc", "B", "C", 10.0, 1),
                spec("ba", "B", "A", 10.0, 1),
            ],
        )
        .unwrap();
        assert_eq!(net.out_links(NodeIdx(1)), &[LinkIdx(1), LinkIdx(2)]);
        assert_eq!(net.in_links(NodeIdx(0)), &[LinkIdx(2)]);
        assert_eq!(net.link_idx("bc").unwrap(), LinkIdx(1));
        assert!(net.link_idx("zz").is_err());
    }
}
