use std::collections::{HashMap, VecDeque};

use proptest::prelude::*;
use savsim::activity::ActType;
use savsim::events::{check_chronological, Attrs, Event, EventKind, TaskKind, VehicleRef};
use savsim::mobsim::{run_day, DayOutput, FleetSetup, MobsimParams, TeleportParams};
use savsim::mode::Mode;
use savsim::network::{build_network, grid_city, GridSpec, LinkIdx, LinkSpec, Network, Node, Router, TravelTimeProfile};
use savsim::population::{Activity, Leg, Plan};
use savsim::savfleet::{DispatchParams, RebalanceParams, SavVehicle, Zoning};

fn node(id: &str, x: f64, y: f64) -> Node {
    Node { id: id.into(), x, y }
}

fn link(from: &str, to: &str, length: f64, speed: f64, cap: f64, lanes: u32) -> LinkSpec {
    LinkSpec {
        id: format!("{from}{to}"),
        from: from.into(),
        to: to.into(),
        length_m: length,
        free_speed_ms: speed,
        capacity_vph: cap,
        lanes,
        car: true,
        sav: true,
    }
}

fn plan(net: &Network, stops: &[(&str, Option<i64>)], mode: Mode, routes: Vec<Vec<&str>>) -> Plan {
    let activities = stops
        .iter()
        .enumerate()
        .map(|(k, (l, end))| Activity {
            kind: if k == 0 || k + 1 == stops.len() { ActType::Home } else { ActType::Work },
            link: net.link_idx(l).unwrap(),
            end_time: *end,
        })
        .collect();
    let legs = (0..stops.len() - 1)
        .map(|k| Leg {
            mode,
            route: routes.get(k).map_or(Vec::new(), |r| r.iter().map(|l| net.link_idx(l).unwrap()).collect()),
        })
        .collect();
    Plan {
        activities,
        legs,
        score: None,
    }
}

struct Setup {
    dispatch: DispatchParams,
    rebalance: RebalanceParams,
    zoning: Zoning,
    profile: TravelTimeProfile,
}

impl Setup {
    fn new(net: &Network) -> Self {
        Setup {
            dispatch: DispatchParams::default(),
            rebalance: RebalanceParams::default(),
            zoning: Zoning::new(net, 1000.0),
            profile: TravelTimeProfile::free_flow(net, 900.0, 48.0 * 3600.0),
        }
    }

    fn run(&self, net: &Network, plans: &[Plan], vehicles: Vec<SavVehicle>, params: &MobsimParams) -> DayOutput {
        let refs: Vec<&Plan> = plans.iter().collect();
        let fleet = FleetSetup {
            vehicles,
            dispatch: &self.dispatch,
            ridesharing: true,
            rebalance: &self.rebalance,
            zoning: &self.zoning,
            demand: None,
        };
        let out = run_day(net, &refs, fleet, &self.profile, params).unwrap();
        check_chronological(&out.events).unwrap();
        out
    }
}

fn of_kind(events: &[Event], kind: EventKind) -> Vec<&Event> {
    events.iter().filter(|e| e.kind == kind).collect()
}

#[test]
fn walk_leg_is_one_end_depart_arrive_triple() {
    let net = build_network(
        vec![node("a", 0.0, 0.0), node("b", 600.0, 0.0), node("c", 1200.0, 0.0)],
        vec![link("a", "b", 600.0, 10.0, 600.0, 1), link("b", "c", 600.0, 10.0, 600.0, 1)],
    )
    .unwrap();
    let s = Setup::new(&net);
    let p = plan(&net, &[("ab", Some(3600)), ("bc", None)], Mode::Walk, vec![]);
    let out = s.run(&net, &[p], Vec::new(), &MobsimParams::default());
    let kinds: Vec<EventKind> = out.events.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, [EventKind::ActEnd, EventKind::Depart, EventKind::PersonArrives]);
    // beeline between link midpoints is 600 m
    let expected = 3600 + (600.0f64 * 1.3 / 1.34).round() as i64;
    assert_eq!(out.events[2].time, expected);
    assert!(!out.persons[0].stuck);
}

#[test]
fn teleport_arithmetic() {
    let t = TeleportParams::default();
    assert_eq!(t.arrival(Mode::Walk, 0.0, 500), Some(500));
    assert_eq!(t.arrival(Mode::Walk, 1000.0, 0), Some(970));
    assert_eq!(t.arrival(Mode::Pt, 5000.0, 0), Some(1270));
    assert_eq!(t.arrival(Mode::Car, 5000.0, 0), None);
}

#[test]
fn second_car_waits_for_outflow() {
    // b-c admits one vehicle per second
    let net = build_network(
        vec![node("a", 0.0, 0.0), node("b", 100.0, 0.0), node("c", 200.0, 0.0)],
        vec![link("a", "b", 100.0, 10.0, 3600.0, 1), link("b", "c", 100.0, 10.0, 3600.0, 1)],
    )
    .unwrap();
    let s = Setup::new(&net);
    let p = plan(&net, &[("ab", Some(100)), ("bc", None)], Mode::Car, vec![vec!["bc"]]);
    let out = s.run(&net, &[p.clone(), p], Vec::new(), &MobsimParams::default());
    let enters: Vec<(i64, u32)> = of_kind(&out.events, EventKind::LinkEnter)
        .iter()
        .map(|e| (e.time, e.person.unwrap()))
        .collect();
    let leaves: Vec<(i64, u32)> = of_kind(&out.events, EventKind::LinkLeave)
        .iter()
        .map(|e| (e.time, e.person.unwrap()))
        .collect();
    // both enter at departure; free flow is 10 s
    assert_eq!(enters, [(100, 0), (100, 1)]);
    assert_eq!(leaves, [(110, 0), (111, 1)]);
    let arrivals: Vec<i64> = of_kind(&out.events, EventKind::PersonArrives).iter().map(|e| e.time).collect();
    assert_eq!(arrivals, [110, 111]);
}

#[test]
fn full_link_holds_cars_upstream() {
    // b-c stores a single vehicle and releases one every 10 s
    let net = build_network(
        vec![node("a", 0.0, 0.0), node("b", 100.0, 0.0), node("c", 107.5, 0.0), node("d", 207.5, 0.0)],
        vec![
            link("a", "b", 100.0, 10.0, 3600.0, 1),
            link("b", "c", 7.5, 10.0, 360.0, 1),
            link("c", "d", 100.0, 10.0, 3600.0, 1),
        ],
    )
    .unwrap();
    let s = Setup::new(&net);
    let p = plan(&net, &[("ab", Some(10)), ("cd", None)], Mode::Car, vec![vec!["bc", "cd"]]);
    let out = s.run(&net, &[p.clone(), p.clone(), p], Vec::new(), &MobsimParams::default());
    let bc = net.link_idx("bc").unwrap();
    let on_bc: Vec<(i64, EventKind, u32)> = out
        .events
        .iter()
        .filter(|e| e.link == Some(bc) && matches!(e.kind, EventKind::LinkEnter | EventKind::LinkLeave))
        .map(|e| (e.time, e.kind, e.person.unwrap()))
        .collect();
    // hand-stepped: 1 s minimum traversal, 10 s headway, one slot
    assert_eq!(
        on_bc,
        [
            (10, EventKind::LinkEnter, 0),
            (11, EventKind::LinkLeave, 0),
            (11, EventKind::LinkEnter, 1),
            (21, EventKind::LinkLeave, 1),
            (21, EventKind::LinkEnter, 2),
            (31, EventKind::LinkLeave, 2),
        ]
    );
    assert_eq!(out.persons.iter().filter(|p| p.stuck).count(), 0);
}

/// Nodes on a line plus a branch: Z-A-B-C-X with B-D-C and C-B, all 100 s.
fn branch_net() -> Network {
    let mk = |f: &str, t: &str| link(f, t, 100.0, 1.0, 600.0, 1);
    build_network(
        vec![
            node("Z", -100.0, 0.0),
            node("A", 0.0, 0.0),
            node("B", 100.0, 0.0),
            node("C", 200.0, 0.0),
            node("D", 100.0, 100.0),
            node("X", 300.0, 0.0),
        ],
        vec![
            mk("Z", "A"),
            mk("A", "B"),
            mk("B", "C"),
            mk("B", "D"),
            mk("D", "C"),
            mk("C", "B"),
            mk("C", "X"),
        ],
    )
    .unwrap()
}

fn sav_events(out: &DayOutput, v: u32) -> Vec<&Event> {
    out.events.iter().filter(|e| e.vehicle == Some(VehicleRef::Sav(v))).collect()
}

#[test]
fn parked_vehicle_starts_driving_at_request_time_and_stops_last_60_s() {
    let net = branch_net();
    let s = Setup::new(&net);
    let veh = SavVehicle::new(0, 4, net.link_idx("ZA").unwrap(), 0);
    let p = plan(&net, &[("BC", Some(1)), ("CX", None)], Mode::Sav, vec![]);
    let out = s.run(&net, &[p], vec![veh], &MobsimParams::default());
    let ev = sav_events(&out, 0);
    let starts: Vec<(i64, TaskKind)> = ev
        .iter()
        .filter(|e| e.kind == EventKind::TaskStart)
        .map(|e| match e.attrs {
            Attrs::Task(k) => (e.time, k),
            _ => unreachable!(),
        })
        .collect();
    // A-B, B-C to the pickup; C-X to the dropoff
    assert_eq!(
        starts,
        [
            (0, TaskKind::Stay),
            (1, TaskKind::Drive),
            (201, TaskKind::Stop),
            (261, TaskKind::Drive),
            (361, TaskKind::Stop),
            (421, TaskKind::Stay),
        ]
    );
    let stop_ends: Vec<i64> = ev
        .iter()
        .filter(|e| e.kind == EventKind::TaskEnd && e.attrs == Attrs::Task(TaskKind::Stop))
        .map(|e| e.time)
        .collect();
    assert_eq!(stop_ends, [261, 421]);
    let arrive = of_kind(&out.events, EventKind::PersonArrives);
    assert_eq!(arrive.len(), 1);
    // arrivals carry the destination activity; the mode is on the departure
    assert_eq!((arrive[0].time, arrive[0].attrs), (361, Attrs::Act(ActType::Home)));
    assert_eq!(of_kind(&out.events, EventKind::Depart)[0].attrs, Attrs::Mode(Mode::Sav));
    assert_eq!(out.persons[0].legs[0].mode, Mode::Sav);
}

#[test]
fn diversion_takes_effect_after_the_current_link() {
    let net = branch_net();
    let mut s = Setup::new(&net);
    s.dispatch.extended_detour = false;
    let veh = SavVehicle::new(0, 4, net.link_idx("ZA").unwrap(), 0);
    // the second request arrives while the vehicle is halfway along A-B
    let p1 = plan(&net, &[("BC", Some(1)), ("CX", None)], Mode::Sav, vec![]);
    let p2 = plan(&net, &[("BD", Some(51)), ("DC", None)], Mode::Sav, vec![]);
    let out = s.run(&net, &[p1, p2], vec![veh], &MobsimParams::default());
    let moves: Vec<(i64, EventKind, String)> = sav_events(&out, 0)
        .iter()
        .filter(|e| matches!(e.kind, EventKind::LinkEnter | EventKind::LinkLeave))
        .map(|e| (e.time, e.kind, net.link(e.link.unwrap()).id.clone()))
        .collect();
    use EventKind::{LinkEnter as In, LinkLeave as Out};
    assert_eq!(
        moves[..4],
        [
            (1, In, "AB".to_string()),
            (101, Out, "AB".to_string()),
            (101, In, "BD".to_string()),
            (201, Out, "BD".to_string()),
        ]
    );
    assert!(out.requests.iter().all(|r| r.dropoff_time.is_some()));
    assert!(out.persons.iter().all(|p| !p.stuck));
}

#[test]
fn rejected_request_walks() {
    let net = branch_net();
    let s = Setup::new(&net);
    let p = plan(&net, &[("BC", Some(1)), ("CX", None)], Mode::Sav, vec![]);
    let out = s.run(&net, &[p], Vec::new(), &MobsimParams::default());
    let kinds: Vec<EventKind> = out.events.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        [
            EventKind::ActEnd,
            EventKind::RequestSubmitted,
            EventKind::RequestRejected,
            EventKind::Depart,
            EventKind::PersonArrives
        ]
    );
    assert_eq!(out.events[3].attrs, Attrs::Mode(Mode::Walk));
    assert!(out.persons[0].legs[0].rejected());
}

#[test]
fn plans_without_routes_are_rejected_before_start() {
    let net = branch_net();
    let s = Setup::new(&net);
    let p = plan(&net, &[("BC", Some(1)), ("CX", None)], Mode::Car, vec![]);
    let refs = [&p];
    let fleet = FleetSetup {
        vehicles: Vec::new(),
        dispatch: &s.dispatch,
        ridesharing: true,
        rebalance: &s.rebalance,
        zoning: &s.zoning,
        demand: None,
    };
    let err = run_day(&net, &refs, fleet, &s.profile, &MobsimParams::default()).unwrap_err();
    assert!(err.to_string().contains("without a route"), "{err}");
}

#[test]
fn horizon_strands_unfinished_agents() {
    let net = branch_net();
    let s = Setup::new(&net);
    let p = plan(&net, &[("BC", Some(100)), ("CX", None)], Mode::Pt, vec![]);
    let params = MobsimParams {
        horizon: 200,
        ..MobsimParams::default()
    };
    let out = s.run(&net, &[p], Vec::new(), &params);
    assert!(out.persons[0].stuck);
    assert_eq!(out.events.last().unwrap().kind, EventKind::PersonStuck);
}

/// Independent replay of queue invariants over an event stream.
fn check_queues(net: &Network, out: &DayOutput, sample_rate: f64) -> Result<(), TestCaseError> {
    let mut buffers: HashMap<LinkIdx, VecDeque<VehicleRef>> = HashMap::new();
    let mut exits: HashMap<LinkIdx, Vec<i64>> = HashMap::new();
    let mut open: HashMap<VehicleRef, LinkIdx> = HashMap::new();
    for e in &out.events {
        let (Some(v @ VehicleRef::Car(_)), Some(l)) = (e.vehicle, e.link) else { continue };
        match e.kind {
            EventKind::LinkEnter => {
                let buf = buffers.entry(l).or_default();
                buf.push_back(v);
                let link = net.link(l);
                let storage = ((link.length * link.lanes as f64 / 7.5 * sample_rate).floor() as usize).max(1);
                prop_assert!(buf.len() <= storage, "storage exceeded on {}", link.id);
                prop_assert!(open.insert(v, l).is_none());
            }
            EventKind::LinkLeave => {
                let head = buffers.get_mut(&l).and_then(|b| b.pop_front());
                prop_assert_eq!(head, Some(v), "FIFO broken on {}", net.link(l).id);
                prop_assert_eq!(open.remove(&v), Some(l));
                exits.entry(l).or_default().push(e.time);
            }
            EventKind::PersonStuck => {
                prop_assert_eq!(open.remove(&v), Some(l));
            }
            _ => {}
        }
    }
    prop_assert!(open.is_empty(), "traversals without leave or stranding record");
    for (l, times) in exits {
        let cap = (net.link(l).capacity_vph * sample_rate).round() as usize;
        for (k, &t) in times.iter().enumerate() {
            let within = times[k..].iter().take_while(|&&x| x < t + 3600).count();
            prop_assert!(within <= cap, "flow exceeded on {}", net.link(l).id);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn car_queues_keep_fifo_flow_and_storage(
        seed_trips in prop::collection::vec((0u32..48, 0u32..48, 0i64..600), 1..60),
        rate in prop::sample::select(vec![0.1, 0.25, 0.5, 1.0]),
    ) {
        let net = grid_city(&GridSpec { size: 4, spacing_m: 100.0, ..GridSpec::default() });
        let s = Setup::new(&net);
        let mut router = Router::new(&net);
        let plans: Vec<Plan> = seed_trips
            .iter()
            .map(|&(o, d, t)| {
                let (o, d) = (LinkIdx(o % net.num_links() as u32), LinkIdx(d % net.num_links() as u32));
                let route = router
                    .shortest_path(&net, &s.profile, o, d, t as f64, Mode::Car)
                    .unwrap()
                    .links;
                Plan {
                    activities: vec![
                        Activity { kind: ActType::Home, link: o, end_time: Some(t) },
                        Activity { kind: ActType::Work, link: d, end_time: None },
                    ],
                    legs: vec![Leg { mode: Mode::Car, route }],
                    score: None,
                }
            })
            .collect();
        let params = MobsimParams { sample_rate: rate, ..MobsimParams::default() };
        let out = s.run(&net, &plans, Vec::new(), &params);
        check_queues(&net, &out, rate)?;
        let again = s.run(&net, &plans, Vec::new(), &params);
        prop_assert_eq!(out.events, again.events);
    }
}
