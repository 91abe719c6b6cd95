//! Simulation event stream and its CSV encoding.
//!
//! Columns: `time,kind,person,vehicle,link,request,attrs`. The trailing
//! `attrs` column carries the per-kind payload as `key=value` pairs joined by
//! `;` (leg mode, activity type, request baselines, task kind), so the file
//! alone is enough to rebuild every KPI.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::activity::ActType;
use crate::mode::Mode;
use crate::network::{LinkIdx, Network};
use crate::Time;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    ActEnd,
    Depart,
    LinkEnter,
    LinkLeave,
    PersonArrives,
    RequestSubmitted,
    RequestScheduled,
    RequestRejected,
    PassengerPickup,
    PassengerDropoff,
    TaskStart,
    TaskEnd,
    RelocationStart,
    /// Agent or vehicle still underway when the simulation horizon ends.
    PersonStuck,
}

impl EventKind {
    const NAMES: [(EventKind, &'static str); 14] = [
        (EventKind::ActEnd, "act_end"),
        (EventKind::Depart, "depart"),
        (EventKind::LinkEnter, "link_enter"),
        (EventKind::LinkLeave, "link_leave"),
        (EventKind::PersonArrives, "person_arrives"),
        (EventKind::RequestSubmitted, "request_submitted"),
        (EventKind::RequestScheduled, "request_scheduled"),
        (EventKind::RequestRejected, "request_rejected"),
        (EventKind::PassengerPickup, "passenger_pickup"),
        (EventKind::PassengerDropoff, "passenger_dropoff"),
        (EventKind::TaskStart, "task_start"),
        (EventKind::TaskEnd, "task_end"),
        (EventKind::RelocationStart, "relocation_start"),
        (EventKind::PersonStuck, "stuck"),
    ];

    pub fn as_str(self) -> &'static str {
        Self::NAMES[self as usize].1
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(k, _)| *k)
            .ok_or_else(|| format!("unknown event kind '{s}'"))
    }
}

/// Vehicle identity: a private car belongs to one person, fleet vehicles are numbered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VehicleRef {
    Car(u32),
    Sav(u32),
}

impl fmt::Display for VehicleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleRef::Car(p) => write!(f, "car_{p}"),
            VehicleRef::Sav(v) => write!(f, "sav_{v}"),
        }
    }
}

impl FromStr for VehicleRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad vehicle id '{s}'");
        if let Some(rest) = s.strip_prefix("car_") {
            rest.parse().map(VehicleRef::Car).map_err(|_| bad())
        } else if let Some(rest) = s.strip_prefix("sav_") {
            rest.parse().map(VehicleRef::Sav).map_err(|_| bad())
        } else {
            Err(bad())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Stay,
    Drive,
    Stop,
    Relocate,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Stay => "stay",
            TaskKind::Drive => "drive",
            TaskKind::Stop => "stop",
            TaskKind::Relocate => "relocate",
        }
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stay" => Ok(TaskKind::Stay),
            "drive" => Ok(TaskKind::Drive),
            "stop" => Ok(TaskKind::Stop),
            "relocate" => Ok(TaskKind::Relocate),
            _ => Err(format!("unknown task kind '{s}'")),
        }
    }
}

/// Kind-specific payload.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Attrs {
    None,
    Mode(Mode),
    Act(ActType),
    /// Destination and direct (unshared) baselines estimated at submission.
    Request {
        dest: LinkIdx,
        direct_time: Time,
        direct_distance: f64,
    },
    /// `extended` marks a ride accepted under the penalized extended-detour tier.
    Scheduled {
        extended: bool,
    },
    Task(TaskKind),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: Time,
    pub kind: EventKind,
    pub person: Option<u32>,
    pub vehicle: Option<VehicleRef>,
    pub link: Option<LinkIdx>,
    pub request: Option<u32>,
    pub attrs: Attrs,
}

impl Event {
    pub fn new(time: Time, kind: EventKind) -> Self {
        Event {
            time,
            kind,
            person: None,
            vehicle: None,
            link: None,
            request: None,
            attrs: Attrs::None,
        }
    }

    pub fn person(mut self, p: u32) -> Self {
        self.person = Some(p);
        self
    }

    pub fn vehicle(mut self, v: VehicleRef) -> Self {
        self.vehicle = Some(v);
        self
    }

    pub fn link(mut self, l: LinkIdx) -> Self {
        self.link = Some(l);
        self
    }

    pub fn request(mut self, r: u32) -> Self {
        self.request = Some(r);
        self
    }

    pub fn attrs(mut self, a: Attrs) -> Self {
        self.attrs = a;
        self
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EventStreamError {
    #[error("t={time}: vehicle {vehicle} leaves link '{link}' it never entered")]
    LeaveWithoutEnter {
        time: Time,
        vehicle: String,
        link: String,
    },
    #[error("event stream goes back in time at t={0}")]
    NotChronological(Time),
    #[error("vehicle {vehicle}: {boardings} boardings vs {alightings} alightings")]
    Unbalanced {
        vehicle: String,
        boardings: u64,
        alightings: u64,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub const CSV_HEADER: &str = "time,kind,person,vehicle,link,request,attrs";

fn write_attrs(out: &mut String, attrs: &Attrs, net: &Network) {
    use std::fmt::Write as _;
    match attrs {
        Attrs::None => {}
        Attrs::Mode(m) => {
            let _ = write!(out, "mode={m}");
        }
        Attrs::Act(a) => {
            let _ = write!(out, "act={a}");
        }
        Attrs::Request {
            dest,
            direct_time,
            direct_distance,
        } => {
            let _ = write!(
                out,
                "dest={};tau={direct_time};dist={direct_distance}",
                net.link(*dest).id
            );
        }
        Attrs::Scheduled { extended } => {
            let _ = write!(out, "extended={}", *extended as u8);
        }
        Attrs::Task(k) => {
            let _ = write!(out, "task={}", k.as_str());
        }
    }
}

/// Writes events as CSV. Output is byte-identical for identical input.
pub fn write_csv<W: Write>(mut w: W, events: &[Event], net: &Network) -> std::io::Result<()> {
    use std::fmt::Write as _;
    writeln!(w, "{CSV_HEADER}")?;
    let mut line = String::with_capacity(96);
    for ev in events {
        line.clear();
        let _ = write!(line, "{},{},", ev.time, ev.kind.as_str());
        if let Some(p) = ev.person {
            let _ = write!(line, "{p}");
        }
        line.push(',');
        if let Some(v) = ev.vehicle {
            let _ = write!(line, "{v}");
        }
        line.push(',');
        if let Some(l) = ev.link {
            line.push_str(&net.link(l).id);
        }
        line.push(',');
        if let Some(r) = ev.request {
            let _ = write!(line, "{r}");
        }
        line.push(',');
        write_attrs(&mut line, &ev.attrs, net);
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn parse_attrs(kind: EventKind, s: &str, net: &Network) -> Result<Attrs, String> {
    if s.is_empty() {
        return Ok(Attrs::None);
    }
    let mut dest = None;
    let mut tau = None;
    let mut dist = None;
    for pair in s.split(';') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("bad attribute '{pair}'"))?;
        match k {
            "mode" => return v.parse().map(Attrs::Mode).map_err(|e| format!("{e}")),
            "act" => return v.parse().map(Attrs::Act).map_err(|e| format!("{e}")),
            "task" => return v.parse().map(Attrs::Task),
            "extended" => {
                return Ok(Attrs::Scheduled {
                    extended: v == "1",
                })
            }
            "dest" => dest = Some(net.link_idx(v).map_err(|e| e.to_string())?),
            "tau" => tau = Some(v.parse().map_err(|_| format!("bad tau '{v}'"))?),
            "dist" => dist = Some(v.parse().map_err(|_| format!("bad dist '{v}'"))?),
            _ => return Err(format!("unknown attribute '{k}' for {}", kind.as_str())),
        }
    }
    match (dest, tau, dist) {
        (Some(dest), Some(direct_time), Some(direct_distance)) => Ok(Attrs::Request {
            dest,
            direct_time,
            direct_distance,
        }),
        _ => Err(format!("incomplete request attributes '{s}'")),
    }
}

/// Parses an event CSV produced by [`write_csv`] against the same network.
pub fn read_csv<R: Read>(r: R, net: &Network) -> Result<Vec<Event>, EventStreamError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let err = |message: String| EventStreamError::Parse { line, message };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if rec.len() != 7 {
            return Err(err(format!("expected 7 columns, got {}", rec.len())));
        }
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let time: Time = rec[0].parse().map_err(|_| err(format!("bad time '{}'", &rec[0])))?;
        let kind: EventKind = rec[1].parse().map_err(err)?;
        let person = opt(&rec[2])
            .map(|s| s.parse::<u32>().map_err(|_| err(format!("bad person '{s}'"))))
            .transpose()?;
        let vehicle = opt(&rec[3])
            .map(|s| s.parse::<VehicleRef>().map_err(err))
            .transpose()?;
        let link = opt(&rec[4])
            .map(|s| net.link_idx(&s).map_err(|e| err(e.to_string())))
            .transpose()?;
        let request = opt(&rec[5])
            .map(|s| s.parse::<u32>().map_err(|_| err(format!("bad request '{s}'"))))
            .transpose()?;
        let attrs = parse_attrs(kind, &rec[6], net).map_err(err)?;
        out.push(Event {
            time,
            kind,
            person,
            vehicle,
            link,
            request,
            attrs,
        });
    }
    Ok(out)
}

/// Checks the stream is nondecreasing in time.
pub fn check_chronological(events: &[Event]) -> Result<(), EventStreamError> {
    match events.windows(2).find(|w| w[1].time < w[0].time) {
        Some(w) => Err(EventStreamError::NotChronological(w[1].time)),
        None => Ok(()),
    }
}
