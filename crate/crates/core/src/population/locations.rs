use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{is_fixed_purpose, Activity, Chain, Leg, Person, Plan, PopulationError, Socprof};
use crate::activity::ActType;
use crate::mode::Mode;
use crate::network::{LinkIdx, Network};

/// Partition of the network's links into zones.
#[derive(Clone, Debug, PartialEq)]
pub struct ZoneMap {
    zone_of: Vec<u32>,
    links: Vec<Vec<LinkIdx>>,
}

impl ZoneMap {
    pub fn from_assignment(zone_of: Vec<u32>, num_zones: usize) -> Self {
        let mut links = vec![Vec::new(); num_zones];
        for (k, &z) in zone_of.iter().enumerate() {
            links[z as usize].push(LinkIdx(k as u32));
        }
        ZoneMap { zone_of, links }
    }

    /// `nx` x `ny` rectangular zones over the node bounding box; links by midpoint.
    pub fn grid(net: &Network, nx: usize, ny: usize) -> Self {
        let (x0, y0, x1, y1) = net.bounds();
        let w = ((x1 - x0) / nx as f64).max(f64::MIN_POSITIVE);
        let h = ((y1 - y0) / ny as f64).max(f64::MIN_POSITIVE);
        let zone_of = net
            .link_indices()
            .map(|l| {
                let (x, y) = net.link_coord(l);
                let c = (((x - x0) / w).floor() as usize).min(nx - 1);
                let r = (((y - y0) / h).floor() as usize).min(ny - 1);
                (r * nx + c) as u32
            })
            .collect();
        Self::from_assignment(zone_of, nx * ny)
    }

    pub fn num_zones(&self) -> usize {
        self.links.len()
    }

    pub fn zone_of(&self, l: LinkIdx) -> u32 {
        self.zone_of[l.index()]
    }

    pub fn links(&self, zone: u32) -> &[LinkIdx] {
        self.links.get(zone as usize).map_or(&[], Vec::as_slice)
    }

    fn random_link(&self, zone: u32, rng: &mut impl Rng) -> Result<LinkIdx, PopulationError> {
        self.links(zone).choose(rng).copied().ok_or(PopulationError::EmptyZone(zone))
    }
}

fn draw(probs: &[f64], rng: &mut impl Rng) -> u32 {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u32;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

fn check_row(what: &str, row: &[f64], zones: usize) -> Result<(), PopulationError> {
    let sum: f64 = row.iter().sum();
    if row.len() != zones || row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(PopulationError::MissingDistribution(format!(
            "{what}: not a distribution over {zones} zones"
        )));
    }
    Ok(())
}

/// Home zone -> destination-zone distribution for work and study.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct WorkStudyTable {
    pub work: Vec<Vec<f64>>,
    pub study: Vec<Vec<f64>>,
}

impl WorkStudyTable {
    pub fn validate(&self, zones: usize) -> Result<(), PopulationError> {
        for (name, rows) in [("work", &self.work), ("study", &self.study)] {
            if rows.len() != zones {
                return Err(PopulationError::MissingDistribution(format!("{name} rows for {zones} zones")));
            }
            for (z, r) in rows.iter().enumerate() {
                check_row(&format!("{name} from zone {z}"), r, zones)?;
            }
        }
        Ok(())
    }
}

/// Destination-zone distributions keyed by (purpose, group, origin zone).
/// A row with no group applies to every group without its own row.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OdMatrix {
    rows: HashMap<(ActType, Option<Socprof>, u32), Vec<f64>>,
}

impl OdMatrix {
    pub fn insert(&mut self, purpose: ActType, group: Option<Socprof>, origin: u32, probs: Vec<f64>) {
        self.rows.insert((purpose, group, origin), probs);
    }

    pub fn row(&self, purpose: ActType, group: Socprof, origin: u32) -> Option<&[f64]> {
        self.rows
            .get(&(purpose, Some(group), origin))
            .or_else(|| self.rows.get(&(purpose, None, origin)))
            .map(Vec::as_slice)
    }

    pub fn validate(&self, zones: usize) -> Result<(), PopulationError> {
        for ((p, g, o), r) in &self.rows {
            let group = g.map_or("*".to_string(), |g| g.to_string());
            check_row(&format!("od {p}/{group} from zone {o}"), r, zones)?;
        }
        Ok(())
    }

    /// Rows sorted by key, for serialization.
    pub fn entries(&self) -> Vec<(ActType, Option<Socprof>, u32, &[f64])> {
        let mut v: Vec<_> = self.rows.iter().map(|((p, g, o), r)| (*p, *g, *o, r.as_slice())).collect();
        v.sort_by_key(|e| (e.0, e.1, e.2));
        v
    }
}

/// Binds each activity of the chain to a link. Home and work/study keep one
/// location per person; other purposes draw a zone from the previous
/// activity's zone. Legs start as walk; see [`initial_modes`].
pub fn assign_locations(
    person: &Person,
    chain: &Chain,
    zones: &ZoneMap,
    work_study: &WorkStudyTable,
    od: &OdMatrix,
    rng: &mut impl Rng,
) -> Result<Plan, PopulationError> {
    let home = zones.random_link(person.home_zone, rng)?;
    let mut fixed: HashMap<ActType, LinkIdx> = HashMap::new();
    let mut activities = Vec::with_capacity(chain.acts.len());
    let mut prev_zone = person.home_zone;
    for (k, &kind) in chain.acts.iter().enumerate() {
        let link = if kind == ActType::Home {
            home
        } else if is_fixed_purpose(kind) {
            match fixed.get(&kind) {
                Some(&l) => l,
                None => {
                    let table = if kind == ActType::Work {
                        &work_study.work
                    } else {
                        &work_study.study
                    };
                    let row = table
                        .get(person.home_zone as usize)
                        .ok_or_else(|| PopulationError::MissingDistribution(format!("{kind} from zone {}", person.home_zone)))?;
                    let l = zones.random_link(draw(row, rng), rng)?;
                    fixed.insert(kind, l);
                    l
                }
            }
        } else {
            let row = od.row(kind, person.socprof, prev_zone).ok_or_else(|| {
                PopulationError::MissingDistribution(format!("od {kind}/{} from zone {prev_zone}", person.socprof))
            })?;
            zones.random_link(draw(row, rng), rng)?
        };
        prev_zone = zones.zone_of(link);
        activities.push(Activity {
            kind,
            link,
            end_time: chain.end_times.get(k).copied(),
        });
    }
    let legs = vec![Leg::new(Mode::Walk); activities.len() - 1];
    Ok(Plan {
        activities,
        legs,
        score: None,
    })
}

/// Starting modes: car for car owners, otherwise transit for tours with any
/// leg longer than `walk_limit_m` beeline and walking for the rest.
pub fn initial_modes(plan: &mut Plan, person: &Person, net: &Network, walk_limit_m: f64) {
    for tour in plan.tours() {
        let mode = if person.car_owner {
            Mode::Car
        } else {
            let far = tour.clone().any(|k| {
                net.beeline(plan.activities[k].link, plan.activities[k + 1].link) > walk_limit_m
            });
            if far {
                Mode::Pt
            } else {
                Mode::Walk
            }
        };
        for k in tour {
            plan.legs[k] = Leg::new(mode);
        }
    }
}
