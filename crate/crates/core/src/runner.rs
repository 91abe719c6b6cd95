//! Single runs and parameter sweeps driven by a [`ScenarioConfig`].

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use crate::coevolution::{run_equilibrium, write_iteration_log, Equilibrium, FleetSpec, IterationStats};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::events::{write_csv, Event};
use crate::metrics::{
    compute_kpis, trend_compare, write_kpi_csv, write_kpi_json, Finding, KpiReport, KpiScenario, SweepPoint,
};
use crate::network::{grid_city, read_network, LinkIdx, Network};
use crate::population::{
    build_population, read_chains, read_controls, read_od, read_plans, read_population, read_seed, read_work_study, toy,
    Person, Plan, PopulationInputs, TemplateSet, ZoneMap,
};

/// Network and population loaded once and shared by every run of a sweep.
pub struct Scenario {
    pub net: Network,
    pub persons: Vec<Person>,
    pub plans: Vec<Plan>,
    pub zones: ZoneMap,
}

fn open(path: &Path) -> Result<std::io::BufReader<File>> {
    File::open(path).map(std::io::BufReader::new).map_err(|e| Error::file(path, e))
}

impl Scenario {
    /// Builds the network and population of a validated config.
    pub fn load(cfg: &ScenarioConfig) -> Result<Self> {
        let n = &cfg.network;
        let net = match (&n.grid, &n.nodes, &n.links) {
            (Some(g), _, _) => grid_city(g),
            (None, Some(nodes), Some(links)) => read_network(nodes, links)?,
            _ => return Err(Error::Config("network: no source".into())),
        };
        let p = &cfg.population;
        let r = cfg.mobsim.sample_rate;
        let (persons, plans, zones) = if let Some(spec) = &p.toy {
            let mut spec = spec.clone();
            spec.agents = ((spec.agents as f64 * r).round() as u32).max(1);
            let pop = toy::generate(&net, &spec, cfg.seed)?;
            let zones = ZoneMap::grid(&net, spec.zones_x, spec.zones_y);
            (pop.persons, pop.plans, zones)
        } else if let Some(s) = &p.synthesis {
            let zones = ZoneMap::grid(&net, p.zones_x, p.zones_y);
            let inputs = PopulationInputs {
                zones: zones.clone(),
                seed: read_seed(open(&s.seed)?).map_err(|e| Error::file(&s.seed, e))?,
                controls: read_controls(open(&s.controls)?).map_err(|e| Error::file(&s.controls, e))?,
                templates: TemplateSet::new(read_chains(open(&s.chains)?).map_err(|e| Error::file(&s.chains, e))?)?,
                work_study: read_work_study(open(&s.work_study)?).map_err(|e| Error::file(&s.work_study, e))?,
                od: read_od(open(&s.od)?).map_err(|e| Error::file(&s.od, e))?,
            };
            let pop = build_population(&net, &inputs, s.epsilon, s.walk_limit_m, cfg.seed)?;
            (pop.persons, pop.plans, zones)
        } else if let (Some(pp), Some(pl)) = (&p.persons, &p.plans) {
            let persons = read_population(open(pp)?).map_err(|e| Error::file(pp, e))?;
            let rows = read_plans(open(pl)?, &net).map_err(|e| Error::file(pl, e))?;
            if rows.len() != persons.len() || rows.iter().enumerate().any(|(k, (id, _))| *id as usize != k) {
                return Err(Error::file(pl, "plans must list persons 0..n in order, one plan each"));
            }
            let zones = ZoneMap::grid(&net, p.zones_x, p.zones_y);
            (persons, rows.into_iter().map(|(_, plan)| plan).collect(), zones)
        } else {
            return Err(Error::Config("population: no source".into()));
        };
        Ok(Scenario {
            net,
            persons,
            plans,
            zones,
        })
    }

    pub fn depots(&self, cfg: &ScenarioConfig) -> Result<Vec<LinkIdx>> {
        cfg.fleet
            .depots
            .iter()
            .map(|id| {
                self.net
                    .link_idx(id)
                    .map_err(|_| Error::Config(format!("fleet.depots: unknown link '{id}'")))
            })
            .collect()
    }
}

/// Result of one equilibrium run, reduced to indicators.
pub struct RunOutput {
    pub point: SweepPoint,
    pub kpi: KpiReport,
    pub log: Vec<IterationStats>,
    pub events: Vec<Event>,
}

pub fn sweep_point(cfg: &ScenarioConfig, fare_multiplier: f64) -> SweepPoint {
    SweepPoint {
        fleet_size: cfg.fleet.size,
        capacity: cfg.fleet.capacity,
        ridesharing: cfg.fleet.ridesharing,
        rebalancing: cfg.fleet.rebalance.enabled,
        fare_multiplier,
    }
}

/// Runs the equilibrium and computes the indicators of its final day.
pub fn execute(cfg: &ScenarioConfig, sc: &Scenario, fare_multiplier: f64) -> Result<RunOutput> {
    cfg.validate()?;
    let fleet = FleetSpec {
        size: cfg.scaled_fleet(),
        capacity: cfg.fleet.capacity,
        depots: sc.depots(cfg)?,
        ridesharing: cfg.fleet.ridesharing,
        dispatch: cfg.fleet.dispatch.clone(),
        rebalance: cfg.fleet.rebalance.clone(),
    };
    let eq = Equilibrium {
        net: &sc.net,
        persons: &sc.persons,
        zones: &sc.zones,
        scoring: &cfg.scoring,
        mobsim: &cfg.mobsim,
        replanning: &cfg.replanning,
        fleet: &fleet,
        iterations: cfg.iterations,
        seed: cfg.seed,
    };
    let res = run_equilibrium(&eq, sc.plans.clone())?;
    let kpi_sc = KpiScenario {
        fleet_size: fleet.size,
        capacity: fleet.capacity,
        max_wait: fleet.dispatch.max_wait,
        detour_factor: fleet.dispatch.detour_factor,
    };
    let kpi = compute_kpis(&res.day.events, &sc.net, &kpi_sc)?;
    Ok(RunOutput {
        point: sweep_point(cfg, fare_multiplier),
        kpi,
        log: res.log,
        events: res.day.events,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::file(path, e))
}

/// Writes `kpi.json`, `kpi.csv`, `iterations.csv` and optionally `events.csv` into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput, net: &Network, events: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    if events {
        let path = dir.join("events.csv");
        write_csv(create(&path)?, &out.events, net).map_err(|e| Error::file(&path, e))?;
    }
    let path = dir.join("kpi.json");
    write_kpi_json(create(&path)?, &out.kpi).map_err(|e| Error::file(&path, e))?;
    let path = dir.join("kpi.csv");
    write_kpi_csv(create(&path)?, &[(out.point.clone(), out.kpi.clone())]).map_err(|e| Error::file(&path, e))?;
    let path = dir.join("iterations.csv");
    write_iteration_log(create(&path)?, &out.log).map_err(|e| Error::file(&path, e))?;
    Ok(())
}

fn check_audit(kpi: &KpiReport, what: &str) -> Result<()> {
    if kpi.audit.is_clean() {
        Ok(())
    } else {
        Err(Error::Invariant(format!("{what}: constraint audit failed: {:?}", kpi.audit)))
    }
}

/// Full run: loads inputs, runs, writes every output, then fails if the
/// constraint audit found violations.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let sc = Scenario::load(cfg)?;
    let out = execute(cfg, &sc, 1.0)?;
    write_outputs(&cfg.output_dir, &out, &sc.net, true)?;
    check_audit(&out.kpi, &cfg.name)?;
    Ok(out)
}

/// Values per sweep axis; an empty axis keeps the base config value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepAxes {
    pub fleet: Vec<u32>,
    pub capacity: Vec<u32>,
    pub ridesharing: Vec<bool>,
    pub rebalancing: Vec<bool>,
    pub fare: Vec<f64>,
}

fn parse_list<T: std::str::FromStr>(axis: &str, values: &str) -> Result<Vec<T>> {
    values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("axis {axis}: bad value '{v}'")))
        })
        .collect()
}

impl SweepAxes {
    /// Parses one `name=v1,v2,...` axis; booleans accept `true`/`false`.
    pub fn add(&mut self, spec: &str) -> Result<()> {
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("axis '{spec}': expected name=v1,v2")))?;
        match name.trim() {
            "fleet" | "fleet_size" => self.fleet = parse_list(name, values)?,
            "capacity" => self.capacity = parse_list(name, values)?,
            "ridesharing" => self.ridesharing = parse_list(name, values)?,
            "rebalancing" => self.rebalancing = parse_list(name, values)?,
            "fare" | "fare_multiplier" => {
                self.fare = parse_list(name, values)?;
                if self.fare.iter().any(|f| !(*f >= 0.0)) {
                    return Err(Error::Config("axis fare: multipliers must be non-negative".into()));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown axis '{other}'; expected fleet, capacity, ridesharing, rebalancing or fare"
                )))
            }
        }
        Ok(())
    }

    fn is_empty(&self) -> bool {
        self.fleet.is_empty()
            && self.capacity.is_empty()
            && self.ridesharing.is_empty()
            && self.rebalancing.is_empty()
            && self.fare.is_empty()
    }

    /// Grid points in row-major order: fare, rebalancing, ridesharing, capacity, then fleet varies fastest.
    pub fn grid(&self, base: &ScenarioConfig) -> Result<Vec<(ScenarioConfig, f64)>> {
        if self.is_empty() {
            return Err(Error::Config("sweep: the grid is empty; give at least one axis with values".into()));
        }
        let or = |v: &Vec<u32>, d: u32| if v.is_empty() { vec![d] } else { v.clone() };
        let orb = |v: &Vec<bool>, d: bool| if v.is_empty() { vec![d] } else { v.clone() };
        let fares = if self.fare.is_empty() { vec![1.0] } else { self.fare.clone() };
        let mut out = Vec::new();
        for &fare in &fares {
            for reb in orb(&self.rebalancing, base.fleet.rebalance.enabled) {
                for rs in orb(&self.ridesharing, base.fleet.ridesharing) {
                    for cap in or(&self.capacity, base.fleet.capacity) {
                        for size in or(&self.fleet, base.fleet.size) {
                            let mut c = base.clone();
                            c.fleet.size = size;
                            c.fleet.capacity = cap;
                            c.fleet.ridesharing = rs;
                            c.fleet.rebalance.enabled = reb;
                            c.scoring.fares.sav_shared_per_km *= fare;
                            let p = sweep_point(&c, fare);
                            c.output_dir = base.output_dir.join(format!("{}-f{}", p.scenario(), p.fleet_size));
                            out.push((c, fare));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Aggregated sweep result in grid order.
pub struct SweepOutput {
    pub rows: Vec<(SweepPoint, KpiReport)>,
    pub findings: Vec<Finding>,
}

/// Runs every grid point on up to `workers` threads. Each point writes its
/// own directory; `kpi.csv` and `findings.txt` aggregate them in grid order.
pub fn sweep(base: &ScenarioConfig, axes: &SweepAxes, workers: usize, events: bool) -> Result<SweepOutput> {
    base.validate()?;
    let grid = axes.grid(base)?;
    for (c, _) in &grid {
        c.validate()?;
    }
    let sc = Scenario::load(base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outputs: Vec<Result<(SweepPoint, KpiReport)>> = pool.install(|| {
        grid.par_iter()
            .map(|(c, fare)| {
                let out = execute(c, &sc, *fare)?;
                write_outputs(&c.output_dir, &out, &sc.net, events)?;
                log::info!(
                    "{} fleet {}: sav share {:.2}%, wait {:.0} s",
                    out.point.scenario(),
                    out.point.fleet_size,
                    out.kpi.modal_split.sav,
                    out.kpi.wait_s.mean
                );
                Ok((out.point, out.kpi))
            })
            .collect()
    });
    let rows = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    let findings = trend_compare(&rows);
    std::fs::create_dir_all(&base.output_dir).map_err(|e| Error::file(&base.output_dir, e))?;
    let path = base.output_dir.join("kpi.csv");
    write_kpi_csv(create(&path)?, &rows).map_err(|e| Error::file(&path, e))?;
    let path = base.output_dir.join("findings.txt");
    let text: String = findings.iter().map(|f| format!("{f}\n")).collect();
    std::fs::write(&path, text).map_err(|e| Error::file(&path, e))?;
    for (p, k) in &rows {
        check_audit(k, &format!("{} fleet {}", p.scenario(), p.fleet_size))?;
    }
    Ok(SweepOutput { rows, findings })
}
