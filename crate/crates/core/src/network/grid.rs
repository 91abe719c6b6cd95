use serde::{Deserialize, Serialize};

use super::{build_network, LinkSpec, Network, Node};

/// Square grid city with bidirectional links and a coarser arterial mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per side.
    pub size: u32,
    pub spacing_m: f64,
    /// Every n-th row and column is an arterial.
    pub arterial_every: u32,
    pub local_speed_ms: f64,
    pub arterial_speed_ms: f64,
    pub local_capacity_vph: f64,
    pub arterial_capacity_vph: f64,
    pub local_lanes: u32,
    pub arterial_lanes: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            size: 16,
            spacing_m: 500.0,
            arterial_every: 5,
            local_speed_ms: 30.0 / 3.6,
            arterial_speed_ms: 50.0 / 3.6,
            local_capacity_vph: 600.0,
            arterial_capacity_vph: 1800.0,
            local_lanes: 1,
            arterial_lanes: 2,
        }
    }
}

pub fn node_id(col: u32, row: u32) -> String {
    format!("n{col}_{row}")
}

pub fn grid_city(spec: &GridSpec) -> Network {
    let n = spec.size;
    let mut nodes = Vec::with_capacity((n * n) as usize);
    for row in 0..n {
        for col in 0..n {
            nodes.push(Node {
                id: node_id(col, row),
                x: col as f64 * spec.spacing_m,
                y: row as f64 * spec.spacing_m,
            });
        }
    }
    let every = spec.arterial_every.max(1);
    let mut links = Vec::new();
    let mut push = |a: (u32, u32), b: (u32, u32), arterial: bool| {
        let (speed, cap, lanes) = if arterial {
            (spec.arterial_speed_ms, spec.arterial_capacity_vph, spec.arterial_lanes)
        } else {
            (spec.local_speed_ms, spec.local_capacity_vph, spec.local_lanes)
        };
        for (from, to) in [(a, b), (b, a)] {
            links.push(LinkSpec {
                id: format!("{}-{}", node_id(from.0, from.1), node_id(to.0, to.1)),
                from: node_id(from.0, from.1),
                to: node_id(to.0, to.1),
                length_m: spec.spacing_m,
                free_speed_ms: speed,
                capacity_vph: cap,
                lanes,
                car: true,
                sav: true,
            });
        }
    };
    for row in 0..n {
        for col in 0..n {
            if col + 1 < n {
                push((col, row), (col + 1, row), row % every == 0);
            }
            if row + 1 < n {
                push((col, row), (col, row + 1), col % every == 0);
            }
        }
    }
    build_network(nodes, links).expect("grid generator emits a valid network")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid16_has_expected_size() {
        let net = grid_city(&GridSpec::default());
        assert_eq!(net.num_nodes(), 256);
        assert_eq!(net.num_links(), 2 * 2 * 16 * 15);
        assert!(net.links().iter().all(|l| l.length == 500.0));
    }
}
