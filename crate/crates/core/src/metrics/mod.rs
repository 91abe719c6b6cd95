//! Fleet performance indicators reduced from an event stream.
//!
//! [`compute_kpis`] is a single fold over the events. It rebuilds each
//! vehicle's task and passenger load as it goes, so every distance is
//! attributed to the occupancy the vehicle had while driving it.

mod output;
mod trend;

pub use output::{flat_columns, write_kpi_csv, write_kpi_json};
pub use trend::{change, series_trend, trend_compare, Finding, Inversion, SweepPoint};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activity::ActType;
use crate::events::{Attrs, Event, EventKind, TaskKind, VehicleRef};
use crate::mode::Mode;
use crate::network::Network;
use crate::Time;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("conservation violated at {time}: {msg}")]
    Conservation { time: Time, msg: String },
    #[error("malformed event at {time}: {msg}")]
    Malformed { time: Time, msg: String },
}

/// Service parameters the indicators are measured against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiScenario {
    pub fleet_size: u32,
    pub capacity: u32,
    pub max_wait: Time,
    pub detour_factor: f64,
}

/// Percent of legs per mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeShares {
    pub car: f64,
    pub pt: f64,
    pub walk: f64,
    pub sav: f64,
}

impl ModeShares {
    pub fn get(&self, m: Mode) -> f64 {
        match m {
            Mode::Car => self.car,
            Mode::Pt => self.pt,
            Mode::Walk => self.walk,
            Mode::Sav => self.sav,
        }
    }

    pub fn total(&self) -> f64 {
        self.car + self.pt + self.walk + self.sav
    }
}

/// Sample summary; quantiles use the nearest-rank rule. All zero when empty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: u64,
    pub mean: f64,
    pub min: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Distribution::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let rank = |q: f64| v[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Distribution {
            count: n as u64,
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            p10: rank(0.1),
            p50: rank(0.5),
            p90: rank(0.9),
            max: v[n - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdShare {
    pub origin: ActType,
    pub dest: ActType,
    pub trips: u64,
    /// Percent of all completed trips.
    pub share: f64,
}

/// Constraint checks reconstructed from the events; all counters are zero
/// for a sound run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub boardings: u64,
    pub alightings: u64,
    /// Served requests picked up later than the maximum wait.
    pub wait_violations: u64,
    /// Standard-tier rides longer than the detour factor times the direct time.
    pub detour_violations: u64,
    /// Pickups that put more passengers aboard than the seat capacity.
    pub capacity_violations: u64,
    /// Requests rejected after having been scheduled.
    pub scheduled_then_rejected: u64,
    pub max_onboard: u32,
    /// |SAV km − (empty km + Σ occupied km by load)|.
    pub km_residual: f64,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.boardings == self.alightings
            && self.wait_violations == 0
            && self.detour_violations == 0
            && self.capacity_violations == 0
            && self.scheduled_then_rejected == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub fleet_size: u32,
    pub capacity: u32,
    /// End of the measured period, seconds; at least one day.
    pub end_time: Time,
    pub legs: u64,
    pub modal_split: ModeShares,
    /// Per hour, fraction of fleet time spent driving to or serving requests.
    pub in_service_rate: Vec<f64>,
    pub in_service_mean: f64,
    pub sav_km: f64,
    /// Empty vehicle km, relocation included.
    pub evk: f64,
    pub relocation_km: f64,
    /// Entry k−1 holds the km driven with exactly k passengers.
    pub km_by_load: Vec<f64>,
    pub empty_distance_ratio: f64,
    /// Passenger km on board fleet vehicles.
    pub pkt: f64,
    /// Entry k−1 is the percent of occupied driving distance at k passengers.
    pub pax_occupancy: Vec<f64>,
    /// As `pax_occupancy`, weighted by occupied driving time.
    pub pax_occupancy_time: Vec<f64>,
    pub requests: u64,
    pub served: u64,
    pub rejected: u64,
    pub extended_rides: u64,
    pub wait_s: Distribution,
    pub ivt_s: Distribution,
    /// Ride time above the direct time estimated at submission.
    pub detour_s: Distribution,
    pub rides_per_sav: f64,
    pub vehicle_km_mean: f64,
    pub vehicle_km_max: f64,
    pub car_km: f64,
    pub total_driven_km: f64,
    pub od_activity_shares: Vec<OdShare>,
    pub audit: Audit,
}

#[derive(Clone, Copy, Default)]
struct RequestTrace {
    submit: Option<Time>,
    direct_time: Time,
    scheduled: bool,
    extended: bool,
    rejected: bool,
    pickup: Option<Time>,
    dropoff: Option<Time>,
    vehicle: Option<u32>,
}

#[derive(Clone, Copy)]
struct VehicleTrace {
    task: Option<(TaskKind, Time)>,
    onboard: u32,
    entered: Option<Time>,
    km: f64,
}

const DAY: Time = 86_400;

fn pct(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        100.0 * part / whole
    } else {
        0.0
    }
}

fn ratio(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        part / whole
    } else {
        0.0
    }
}

/// Adds the in-service part of `[from, to)` to the hourly buckets.
fn add_service(hours: &mut [f64], from: Time, to: Time) {
    let mut t = from;
    while t < to {
        let h = (t / 3600) as usize;
        let edge = ((h as Time) + 1) * 3600;
        let upto = edge.min(to);
        if let Some(b) = hours.get_mut(h) {
            *b += (upto - t) as f64;
        }
        t = upto;
    }
}

fn malformed(ev: &Event, msg: &str) -> MetricsError {
    MetricsError::Malformed {
        time: ev.time,
        msg: format!("{} {msg}", ev.kind.as_str()),
    }
}

/// Reduces an event stream to the indicator suite.
///
/// Fails when a passenger leaves a vehicle they never boarded or is still
/// aboard when the stream ends.
pub fn compute_kpis(events: &[Event], net: &Network, sc: &KpiScenario) -> Result<KpiReport, MetricsError> {
    let end_time = events.last().map_or(0, |e| e.time).max(DAY);
    let n_hours = ((end_time + 3599) / 3600) as usize;
    let cap = sc.capacity as usize;

    let mut mode_counts = [0u64; 4];
    let mut requests: Vec<RequestTrace> = Vec::new();
    let mut vehicles: Vec<VehicleTrace> = Vec::new();
    let mut service = vec![0.0f64; n_hours];
    let mut km_by_load: Vec<f64> = vec![0.0; cap];
    let mut time_by_load: Vec<f64> = vec![0.0; cap];
    let (mut sav_km, mut evk, mut relocation_km, mut car_km) = (0.0, 0.0, 0.0, 0.0);
    let mut audit = Audit::default();
    let mut origin_act: BTreeMap<u32, ActType> = BTreeMap::new();
    let mut od: BTreeMap<(ActType, ActType), u64> = BTreeMap::new();

    let vehicle_of = |vehicles: &mut Vec<VehicleTrace>, ev: &Event| -> Result<usize, MetricsError> {
        let Some(VehicleRef::Sav(v)) = ev.vehicle else {
            return Err(malformed(ev, "without a fleet vehicle"));
        };
        let v = v as usize;
        if v >= vehicles.len() {
            vehicles.resize(
                v + 1,
                VehicleTrace {
                    task: None,
                    onboard: 0,
                    entered: None,
                    km: 0.0,
                },
            );
        }
        Ok(v)
    };
    let request_of = |requests: &mut Vec<RequestTrace>, ev: &Event| -> Result<usize, MetricsError> {
        let r = ev.request.ok_or_else(|| malformed(ev, "without a request"))? as usize;
        if r >= requests.len() {
            requests.resize(r + 1, RequestTrace::default());
        }
        Ok(r)
    };

    for ev in events {
        match ev.kind {
            EventKind::Depart => {
                if let Attrs::Mode(m) = ev.attrs {
                    mode_counts[m.index()] += 1;
                }
            }
            EventKind::ActEnd => {
                if let (Some(p), Attrs::Act(a)) = (ev.person, ev.attrs) {
                    origin_act.insert(p, a);
                }
            }
            EventKind::PersonArrives => {
                if let (Some(p), Attrs::Act(a)) = (ev.person, ev.attrs) {
                    if let Some(o) = origin_act.remove(&p) {
                        *od.entry((o, a)).or_default() += 1;
                    }
                }
            }
            EventKind::LinkEnter | EventKind::LinkLeave => match ev.vehicle {
                Some(VehicleRef::Car(_)) if ev.kind == EventKind::LinkLeave => {
                    let l = ev.link.ok_or_else(|| malformed(ev, "without a link"))?;
                    car_km += net.link(l).length / 1000.0;
                }
                Some(VehicleRef::Sav(_)) => {
                    let v = vehicle_of(&mut vehicles, ev)?;
                    let vt = &mut vehicles[v];
                    if ev.kind == EventKind::LinkEnter {
                        vt.entered = Some(ev.time);
                        continue;
                    }
                    let l = ev.link.ok_or_else(|| malformed(ev, "without a link"))?;
                    let km = net.link(l).length / 1000.0;
                    let dt = vt.entered.take().map_or(0, |t| ev.time - t) as f64;
                    vt.km += km;
                    sav_km += km;
                    let load = vt.onboard as usize;
                    if load == 0 {
                        evk += km;
                        if matches!(vt.task, Some((TaskKind::Relocate, _))) {
                            relocation_km += km;
                        }
                    } else {
                        if load > km_by_load.len() {
                            km_by_load.resize(load, 0.0);
                            time_by_load.resize(load, 0.0);
                        }
                        km_by_load[load - 1] += km;
                        time_by_load[load - 1] += dt;
                    }
                }
                _ => {}
            },
            EventKind::TaskStart | EventKind::TaskEnd => {
                let Attrs::Task(kind) = ev.attrs else {
                    return Err(malformed(ev, "without a task kind"));
                };
                let v = vehicle_of(&mut vehicles, ev)?;
                let vt = &mut vehicles[v];
                if ev.kind == EventKind::TaskStart {
                    vt.task = Some((kind, ev.time));
                } else {
                    if let Some((k, since)) = vt.task.take() {
                        if k != kind {
                            return Err(malformed(ev, &format!("ends {} while {} runs", kind.as_str(), k.as_str())));
                        }
                        if matches!(k, TaskKind::Drive | TaskKind::Stop) {
                            add_service(&mut service, since, ev.time);
                        }
                    }
                }
            }
            EventKind::RequestSubmitted => {
                let r = request_of(&mut requests, ev)?;
                let Attrs::Request { direct_time, .. } = ev.attrs else {
                    return Err(malformed(ev, "without direct estimates"));
                };
                requests[r].submit = Some(ev.time);
                requests[r].direct_time = direct_time;
            }
            EventKind::RequestScheduled => {
                let r = request_of(&mut requests, ev)?;
                requests[r].scheduled = true;
                requests[r].extended = matches!(ev.attrs, Attrs::Scheduled { extended: true });
            }
            EventKind::RequestRejected => {
                let r = request_of(&mut requests, ev)?;
                if requests[r].scheduled {
                    audit.scheduled_then_rejected += 1;
                }
                requests[r].rejected = true;
            }
            EventKind::PassengerPickup => {
                let r = request_of(&mut requests, ev)?;
                let v = vehicle_of(&mut vehicles, ev)?;
                if requests[r].pickup.is_some() {
                    return Err(MetricsError::Conservation {
                        time: ev.time,
                        msg: format!("request {r} boards twice"),
                    });
                }
                requests[r].pickup = Some(ev.time);
                requests[r].vehicle = Some(v as u32);
                let vt = &mut vehicles[v];
                vt.onboard += 1;
                audit.boardings += 1;
                audit.max_onboard = audit.max_onboard.max(vt.onboard);
                if vt.onboard > sc.capacity {
                    audit.capacity_violations += 1;
                }
            }
            EventKind::PassengerDropoff => {
                let r = request_of(&mut requests, ev)?;
                let v = vehicle_of(&mut vehicles, ev)?;
                let rt = &mut requests[r];
                if rt.pickup.is_none() || rt.dropoff.is_some() || rt.vehicle != Some(v as u32) {
                    return Err(MetricsError::Conservation {
                        time: ev.time,
                        msg: format!("request {r} alights from sav_{v} without boarding it"),
                    });
                }
                rt.dropoff = Some(ev.time);
                vehicles[v].onboard -= 1;
                audit.alightings += 1;
            }
            EventKind::RelocationStart | EventKind::PersonStuck => {}
        }
    }

    for (v, vt) in vehicles.iter().enumerate() {
        if vt.onboard > 0 {
            return Err(MetricsError::Conservation {
                time: end_time,
                msg: format!("{} passengers still aboard sav_{v}", vt.onboard),
            });
        }
        if let Some((k, since)) = vt.task {
            if matches!(k, TaskKind::Drive | TaskKind::Stop) {
                add_service(&mut service, since, end_time);
            }
        }
    }

    let fleet = sc.fleet_size.max(vehicles.len() as u32);
    let in_service_rate: Vec<f64> = (0..n_hours)
        .map(|h| {
            let span = ((h as Time + 1) * 3600).min(end_time) - h as Time * 3600;
            ratio(service[h], fleet as f64 * span as f64)
        })
        .collect();
    let in_service_mean = ratio(service.iter().sum(), fleet as f64 * end_time as f64);

    let (mut waits, mut ivts, mut detours) = (Vec::new(), Vec::new(), Vec::new());
    let (mut served, mut rejected, mut extended) = (0, 0, 0);
    for rt in &requests {
        rejected += rt.rejected as u64;
        extended += (rt.scheduled && rt.extended) as u64;
        let (Some(submit), Some(pickup)) = (rt.submit, rt.pickup) else { continue };
        served += 1;
        let wait = pickup - submit;
        waits.push(wait as f64);
        if wait > sc.max_wait {
            audit.wait_violations += 1;
        }
        if let Some(dropoff) = rt.dropoff {
            let ivt = (dropoff - pickup) as f64;
            ivts.push(ivt);
            detours.push(ivt - rt.direct_time as f64);
            if !rt.extended && ivt > sc.detour_factor * rt.direct_time as f64 {
                audit.detour_violations += 1;
            }
        }
    }

    let occupied_km: f64 = km_by_load.iter().sum();
    let occupied_s: f64 = time_by_load.iter().sum();
    let pkt: f64 = km_by_load.iter().enumerate().map(|(k, km)| (k + 1) as f64 * km).sum();
    audit.km_residual = (sav_km - (evk + occupied_km)).abs();

    let legs: u64 = mode_counts.iter().sum();
    let share = |m: Mode| pct(mode_counts[m.index()] as f64, legs as f64);
    let trips: u64 = od.values().sum();
    let mut per_vehicle: Vec<f64> = vehicles.iter().map(|v| v.km).collect();
    per_vehicle.resize(fleet as usize, 0.0);
    let car_or_sav_km = car_km + sav_km;

    Ok(KpiReport {
        fleet_size: sc.fleet_size,
        capacity: sc.capacity,
        end_time,
        legs,
        modal_split: ModeShares {
            car: share(Mode::Car),
            pt: share(Mode::Pt),
            walk: share(Mode::Walk),
            sav: share(Mode::Sav),
        },
        in_service_rate,
        in_service_mean,
        sav_km,
        evk,
        relocation_km,
        pax_occupancy: km_by_load.iter().map(|&x| pct(x, occupied_km)).collect(),
        pax_occupancy_time: time_by_load.iter().map(|&x| pct(x, occupied_s)).collect(),
        km_by_load,
        empty_distance_ratio: ratio(evk, sav_km),
        pkt,
        requests: requests.iter().filter(|r| r.submit.is_some()).count() as u64,
        served,
        rejected,
        extended_rides: extended,
        wait_s: Distribution::of(&waits),
        ivt_s: Distribution::of(&ivts),
        detour_s: Distribution::of(&detours),
        rides_per_sav: ratio(audit.boardings as f64, sc.fleet_size as f64),
        vehicle_km_mean: ratio(per_vehicle.iter().sum(), per_vehicle.len() as f64),
        vehicle_km_max: per_vehicle.iter().copied().fold(0.0, f64::max),
        car_km,
        total_driven_km: car_or_sav_km,
        od_activity_shares: od
            .into_iter()
            .map(|((origin, dest), n)| OdShare {
                origin,
                dest,
                trips: n,
                share: pct(n as f64, trips as f64),
            })
            .collect(),
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_quantiles() {
        let d = Distribution::of(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!((d.count, d.min, d.p50, d.max, d.mean), (5, 1.0, 3.0, 5.0, 3.0));
        assert_eq!(d.p10, 1.0);
        assert_eq!(d.p90, 5.0);
        assert_eq!(Distribution::of(&[]), Distribution::default());
    }

    #[test]
    fn service_time_splits_at_hour_edges() {
        let mut h = vec![0.0; 3];
        add_service(&mut h, 3000, 7500);
        assert_eq!(h, vec![600.0, 3600.0, 300.0]);
    }
}
