use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_network, LinkSpec, Network, Node};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct LinkRow {
    id: String,
    from: String,
    to: String,
    length_m: f64,
    free_speed_ms: f64,
    capacity_vph: f64,
    lanes: u32,
    modes: String,
}

fn parse_modes(s: &str) -> (bool, bool) {
    let mut car = false;
    let mut sav = false;
    for m in s.split([',', ';', ' ', '|']).filter(|m| !m.is_empty()) {
        match m {
            "car" => car = true,
            "sav" => sav = true,
            _ => {}
        }
    }
    (car, sav)
}

/// Reads `nodes.csv` (id,x,y) and `links.csv` (id,from,to,length_m,free_speed_ms,capacity_vph,lanes,modes).
pub fn read_network(nodes_path: &Path, links_path: &Path) -> Result<Network> {
    let mut nodes = Vec::new();
    let mut rdr = csv::Reader::from_path(nodes_path).map_err(|e| Error::file(nodes_path, e))?;
    for row in rdr.deserialize() {
        let node: Node = row.map_err(|e| Error::file(nodes_path, e))?;
        nodes.push(node);
    }
    let mut links = Vec::new();
    let mut rdr = csv::Reader::from_path(links_path).map_err(|e| Error::file(links_path, e))?;
    for row in rdr.deserialize() {
        let r: LinkRow = row.map_err(|e| Error::file(links_path, e))?;
        let (car, sav) = parse_modes(&r.modes);
        links.push(LinkSpec {
            id: r.id,
            from: r.from,
            to: r.to,
            length_m: r.length_m,
            free_speed_ms: r.free_speed_ms,
            capacity_vph: r.capacity_vph,
            lanes: r.lanes,
            car,
            sav,
        });
    }
    Ok(build_network(nodes, links)?)
}

pub fn write_network(net: &Network, nodes_path: &Path, links_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(nodes_path).map_err(|e| Error::file(nodes_path, e))?;
    for n in net.nodes() {
        w.serialize(n).map_err(|e| Error::file(nodes_path, e))?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(links_path).map_err(|e| Error::file(links_path, e))?;
    for l in net.links() {
        let modes = match (l.car, l.sav) {
            (true, true) => "car,sav",
            (true, false) => "car",
            (false, true) => "sav",
            (false, false) => "",
        };
        w.serialize(LinkRow {
            id: l.id.clone(),
            from: net.node(l.from).id.clone(),
            to: net.node(l.to).id.clone(),
            length_m: l.length,
            free_speed_ms: l.free_speed,
            capacity_vph: l.capacity_vph,
            lanes: l.lanes,
            modes: modes.to_string(),
        })
        .map_err(|e| Error::file(links_path, e))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{grid_city, GridSpec};

    #[test]
    fn grid_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let net = grid_city(&GridSpec {
            size: 4,
            ..GridSpec::default()
        });
        let (n, l) = (dir.path().join("nodes.csv"), dir.path().join("links.csv"));
        write_network(&net, &n, &l).unwrap();
        let back = read_network(&n, &l).unwrap();
        assert_eq!(back.nodes(), net.nodes());
        assert_eq!(back.links(), net.links());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_network(Path::new("/nonexistent/nodes.csv"), Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/nodes.csv"));
    }

    #[test]
    fn mode_lists_accept_several_separators() {
        assert_eq!(parse_modes("car,sav"), (true, true));
        assert_eq!(parse_modes("sav"), (false, true));
        assert_eq!(parse_modes("car;pt"), (true, false));
    }
}
