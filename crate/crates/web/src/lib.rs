//! Browser bindings. Each exported function takes plain arguments and
//! returns a JSON string; the page in `www/` renders it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use savsim::coevolution::IterationStats;
use savsim::config::ScenarioConfig;
use savsim::metrics::KpiReport;
use savsim::mode::Mode;
use savsim::network::{grid_city, GridSpec, LinkIdx, Network, Skim, TravelTimeProfile};
use savsim::population::toy::ToySpec;
use savsim::runner::{execute, Scenario};
use savsim::savfleet::{
    apply_insertion, evaluate_insertion, find_best_insertion, transport_plan, DispatchParams, Insertion,
    InsertionContext, Request, Route, SavVehicle, Task, Zoning,
};
use savsim::Time;

/// Inputs of a browser city run; missing fields take the defaults.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CityParams {
    pub agents: u32,
    pub fleet: u32,
    pub capacity: u32,
    pub ridesharing: bool,
    pub rebalancing: bool,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CityParams {
    fn default() -> Self {
        CityParams {
            agents: 600,
            fleet: 20,
            capacity: 4,
            ridesharing: true,
            rebalancing: true,
            iterations: 15,
            seed: 3000,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CityResult {
    pub kpi: KpiReport,
    pub log: Vec<IterationStats>,
}

/// Runs the 8x8 toy city to equilibrium with the given fleet.
pub fn city_run(p: &CityParams) -> Result<CityResult, String> {
    let mut cfg = ScenarioConfig::preset("grid8").expect("bundled preset");
    cfg.seed = p.seed;
    cfg.iterations = p.iterations;
    cfg.fleet.size = p.fleet;
    cfg.fleet.capacity = p.capacity;
    cfg.fleet.ridesharing = p.ridesharing;
    cfg.fleet.rebalance.enabled = p.rebalancing;
    cfg.population.toy = Some(ToySpec {
        agents: p.agents,
        seed_size: p.agents.max(200) as usize,
        ..ToySpec::small()
    });
    cfg.validate().map_err(|e| e.to_string())?;
    let sc = Scenario::load(&cfg).map_err(|e| e.to_string())?;
    let out = execute(&cfg, &sc, 1.0).map_err(|e| e.to_string())?;
    Ok(CityResult {
        kpi: out.kpi,
        log: out.log,
    })
}

#[derive(Debug, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Serialize)]
pub struct DemoStop {
    pub at: Point,
    pub arrival: Time,
    pub departure: Time,
    pub pickups: Vec<u32>,
    pub dropoffs: Vec<u32>,
}

#[derive(Debug, Serialize)]
pub struct Candidate {
    pub pickup_idx: usize,
    pub dropoff_idx: usize,
    /// Absent when the insertion violates a wait, ride or capacity bound.
    pub delta_work: Option<Time>,
    pub pickup_time: Option<Time>,
    pub dropoff_time: Option<Time>,
    pub extended: bool,
}

#[derive(Debug, Serialize)]
pub struct InsertionDemo {
    pub grid_size: u32,
    pub spacing_m: f64,
    pub capacity: u32,
    /// Where the vehicle can first change its plan.
    pub divert: Point,
    pub stops: Vec<DemoStop>,
    pub request: u32,
    pub origin: Point,
    pub dest: Point,
    pub direct_time: Time,
    pub candidates: Vec<Candidate>,
    pub best: Option<(usize, usize)>,
}

const DEMO_GRID: u32 = 6;

fn end_point(net: &Network, l: LinkIdx) -> Point {
    let (x, y) = net.link_end(l);
    Point { x, y }
}

fn random_link(rng: &mut ChaCha8Rng, net: &Network) -> LinkIdx {
    LinkIdx(rng.random_range(0..net.num_links() as u32))
}

fn random_request(rng: &mut ChaCha8Rng, net: &Network, skim: &Skim, id: u32, avoid: LinkIdx) -> Request {
    let origin = loop {
        let l = random_link(rng, net);
        if l != avoid {
            break l;
        }
    };
    let dest = loop {
        let l = random_link(rng, net);
        if l != origin {
            break l;
        }
    };
    let row = skim.forward(net, origin);
    let route = Route::plan(net, skim, &row, dest, 0).expect("grid is strongly connected");
    Request::new(id, id, origin, dest, 0, route.end(), route.distance(net))
}

/// Builds a one-vehicle schedule from `committed` random requests, then
/// evaluates every (pickup, dropoff) position for one more request.
pub fn insertion(seed: u64, capacity: u32, committed: u32) -> InsertionDemo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GridSpec {
        size: DEMO_GRID,
        ..GridSpec::default()
    };
    let net = grid_city(&spec);
    let profile = TravelTimeProfile::free_flow(&net, 900.0, 86_400.0);
    let skim = Skim::from_profile(&net, &profile, 0.0, Mode::Sav);
    let params = DispatchParams::default();
    let ctx = InsertionContext {
        net: &net,
        skim: &skim,
        params: &params,
        ridesharing: true,
    };
    let depot = random_link(&mut rng, &net);
    let mut vehicles = vec![SavVehicle::new(0, capacity.max(1), depot, 0)];
    let mut requests: Vec<Request> = Vec::new();
    for id in 0..committed {
        let req = random_request(&mut rng, &net, &skim, id, depot);
        requests.push(req.clone());
        if let Some(ins) = find_best_insertion(&ctx, &vehicles, &requests, &req, 0) {
            let v = &mut vehicles[0];
            let parked = matches!(v.task, Task::Stay { .. });
            apply_insertion(&ctx, v, &mut requests, id, &ins, 0).expect("evaluated insertion applies");
            if parked && !v.stops[0].leg.links.is_empty() {
                v.task = Task::ToStop { pos: 0 };
            }
        }
    }
    let id = requests.len() as u32;
    let req = random_request(&mut rng, &net, &skim, id, depot);
    requests.push(req.clone());
    let v = &vehicles[0];
    let n = v.stops.len();
    let mut candidates = Vec::new();
    for i in 0..=n {
        for j in i..=n {
            let ins: Option<Insertion> = evaluate_insertion(&ctx, v, &requests, &req, 0, i, j);
            candidates.push(Candidate {
                pickup_idx: i,
                dropoff_idx: j,
                delta_work: ins.map(|x| x.delta_work),
                pickup_time: ins.map(|x| x.pickup_time),
                dropoff_time: ins.map(|x| x.dropoff_time),
                extended: ins.is_some_and(|x| x.extended),
            });
        }
    }
    let best = find_best_insertion(&ctx, &vehicles, &requests, &req, 0).map(|b| (b.pickup_idx, b.dropoff_idx));
    InsertionDemo {
        grid_size: DEMO_GRID,
        spacing_m: spec.spacing_m,
        capacity: v.capacity,
        divert: end_point(&net, v.divert_point(0).0),
        stops: v
            .stops
            .iter()
            .map(|s| DemoStop {
                at: end_point(&net, s.link),
                arrival: s.arrival,
                departure: s.departure,
                pickups: s.pickups.clone(),
                dropoffs: s.dropoffs.clone(),
            })
            .collect(),
        request: id,
        origin: end_point(&net, req.origin),
        dest: end_point(&net, req.dest),
        direct_time: req.direct_time,
        candidates,
        best,
    }
}

#[derive(Debug, Serialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
    pub supply: u32,
    pub deficit: u32,
}

#[derive(Debug, Serialize)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub vehicles: u32,
    pub cost_m: i64,
}

#[derive(Debug, Serialize)]
pub struct RebalanceDemo {
    pub cells_per_side: usize,
    pub cells: Vec<Cell>,
    pub flows: Vec<Flow>,
    pub moved: u32,
    pub total_cost_m: i64,
}

/// Random idle-vehicle surpluses and demand deficits on an n x n zoning,
/// moved at minimum total beeline distance.
pub fn rebalancing(seed: u64, cells_per_side: u32) -> RebalanceDemo {
    let n = cells_per_side.clamp(2, 8);
    let spacing = 500.0;
    let net = grid_city(&GridSpec {
        size: n,
        spacing_m: spacing,
        ..GridSpec::default()
    });
    let zoning = Zoning::new(&net, spacing);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = n as usize;
    let cells: Vec<Cell> = (0..zoning.num_cells())
        .map(|c| {
            let v = rng.random_range(0..=4);
            let surplus = rng.random_bool(0.5);
            Cell {
                col: c % side,
                row: c / side,
                supply: if surplus { v } else { 0 },
                deficit: if surplus { 0 } else { v },
            }
        })
        .collect();
    let src: Vec<usize> = (0..cells.len()).filter(|&c| cells[c].supply > 0).collect();
    let dst: Vec<usize> = (0..cells.len()).filter(|&c| cells[c].deficit > 0).collect();
    let supply: Vec<u32> = src.iter().map(|&c| cells[c].supply).collect();
    let deficit: Vec<u32> = dst.iter().map(|&c| cells[c].deficit).collect();
    let plan = transport_plan(&supply, &deficit, |s, d| zoning.cost(src[s], dst[d]));
    let mut flows = Vec::new();
    for (s, row) in plan.iter().enumerate() {
        for (d, &k) in row.iter().enumerate() {
            if k > 0 {
                flows.push(Flow {
                    from: src[s],
                    to: dst[d],
                    vehicles: k,
                    cost_m: zoning.cost(src[s], dst[d]),
                });
            }
        }
    }
    RebalanceDemo {
        cells_per_side: side,
        moved: flows.iter().map(|f| f.vehicles).sum(),
        total_cost_m: flows.iter().map(|f| f.vehicles as i64 * f.cost_m).sum(),
        cells,
        flows,
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// `params` is a JSON object with any of the `CityParams` fields.
#[wasm_bindgen]
pub fn run_city(params: &str) -> Result<String, JsValue> {
    let p: CityParams = serde_json::from_str(params).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let res = city_run(&p).map_err(|e| JsValue::from_str(&e))?;
    to_json(&res)
}

#[wasm_bindgen]
pub fn insertion_demo(seed: u32, capacity: u32, committed: u32) -> Result<String, JsValue> {
    to_json(&insertion(seed as u64, capacity, committed.min(4)))
}

#[wasm_bindgen]
pub fn rebalance_demo(seed: u32, cells_per_side: u32) -> Result<String, JsValue> {
    to_json(&rebalancing(seed as u64, cells_per_side))
}
