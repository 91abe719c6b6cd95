//! CSV formats of the population inputs and outputs.
//!
//! Lists inside a cell are space separated; activity sequences use `-` and
//! per-activity timings `|` with `:` between the four values (hours).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{
    ActTiming, Activity, Attribute, ChainTemplate, Leg, OdMatrix, Person, Plan, PopulationError, SeedPerson, Socprof,
    WorkStudyTable, ZoneControls,
};
use crate::activity::ActType;
use crate::network::Network;
use crate::{Error, Result, Time};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    PopulationError::Parse {
        line,
        message: message.into(),
    }
    .into()
}

fn read_records<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize().enumerate() {
        out.push(rec.map_err(|e| parse_err(k + 2, e.to_string()))?);
    }
    Ok(out)
}

fn write_records<T: Serialize>(w: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_list(line: usize, s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|x| x.parse::<f64>().map_err(|e| parse_err(line, format!("'{x}': {e}"))))
        .collect()
}

fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn read_seed(r: impl Read) -> Result<Vec<SeedPerson>> {
    read_records(r)
}

pub fn write_seed(w: impl Write, seed: &[SeedPerson]) -> Result<()> {
    write_records(w, seed)
}

pub fn read_population(r: impl Read) -> Result<Vec<Person>> {
    let persons: Vec<Person> = read_records(r)?;
    for (k, p) in persons.iter().enumerate() {
        if p.id as usize != k {
            return Err(parse_err(k + 2, format!("person ids must be 0..n in order, found {}", p.id)));
        }
        if !p.is_consistent() {
            return Err(parse_err(k + 2, format!("person {} has inconsistent attributes", p.id)));
        }
    }
    Ok(persons)
}

pub fn write_population(w: impl Write, persons: &[Person]) -> Result<()> {
    write_records(w, persons)
}

#[derive(Serialize, Deserialize)]
struct ControlRow {
    zone: u32,
    attribute: Attribute,
    level: usize,
    count: u32,
}

pub fn read_controls(r: impl Read) -> Result<Vec<ZoneControls>> {
    let rows: Vec<ControlRow> = read_records(r)?;
    let mut zones: Vec<ZoneControls> = Vec::new();
    for (k, row) in rows.into_iter().enumerate() {
        if row.level >= row.attribute.levels() {
            return Err(parse_err(k + 2, format!("level {} out of range", row.level)));
        }
        let z = match zones.iter().position(|z| z.zone == row.zone) {
            Some(i) => i,
            None => {
                zones.push(ZoneControls {
                    zone: row.zone,
                    age_gender: vec![0; Attribute::AgeGender.levels()],
                    income: vec![0; Attribute::Income.levels()],
                    socprof: vec![0; Attribute::Socprof.levels()],
                });
                zones.len() - 1
            }
        };
        let zc = &mut zones[z];
        let slot = match row.attribute {
            Attribute::AgeGender => &mut zc.age_gender,
            Attribute::Income => &mut zc.income,
            Attribute::Socprof => &mut zc.socprof,
        };
        slot[row.level] = row.count;
    }
    zones.sort_by_key(|z| z.zone);
    Ok(zones)
}

pub fn write_controls(w: impl Write, controls: &[ZoneControls]) -> Result<()> {
    let rows = controls.iter().flat_map(|c| {
        Attribute::ALL.into_iter().flat_map(move |a| {
            c.get(a).iter().enumerate().map(move |(level, &count)| ControlRow {
                zone: c.zone,
                attribute: a,
                level,
                count,
            })
        })
    });
    write_records(w, rows)
}

#[derive(Serialize, Deserialize)]
struct ChainRow {
    id: String,
    group: Socprof,
    probability: f64,
    activities: String,
    timings: String,
}

pub fn read_chains(r: impl Read) -> Result<Vec<ChainTemplate>> {
    let rows: Vec<ChainRow> = read_records(r)?;
    rows.into_iter()
        .enumerate()
        .map(|(k, row)| {
            let line = k + 2;
            let acts = row
                .activities
                .split('-')
                .map(|a| a.parse::<ActType>().map_err(|e| parse_err(line, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let timings = row
                .timings
                .split('|')
                .map(|t| {
                    let v: Vec<f64> = t
                        .split(':')
                        .map(|x| x.trim().parse::<f64>().map_err(|e| parse_err(line, format!("'{x}': {e}"))))
                        .collect::<Result<_>>()?;
                    match v[..] {
                        [a, b, c, d] => Ok(ActTiming::new(a, b, c, d)),
                        _ => Err(parse_err(line, format!("timing '{t}' needs four values"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ChainTemplate {
                id: row.id,
                group: row.group,
                probability: row.probability,
                acts,
                timings,
            })
        })
        .collect()
}

pub fn write_chains(w: impl Write, templates: &[ChainTemplate]) -> Result<()> {
    let h = |s: f64| s / 3600.0;
    write_records(
        w,
        templates.iter().map(|t| ChainRow {
            id: t.id.clone(),
            group: t.group,
            probability: t.probability,
            activities: t.acts.iter().map(|a| a.as_str()).collect::<Vec<_>>().join("-"),
            timings: t
                .timings
                .iter()
                .map(|x| format!("{}:{}:{}:{}", h(x.start_mean), h(x.start_sd), h(x.dur_mean), h(x.dur_sd)))
                .collect::<Vec<_>>()
                .join("|"),
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct OdRow {
    purpose: ActType,
    group: String,
    origin: u32,
    probs: String,
}

pub fn read_od(r: impl Read) -> Result<OdMatrix> {
    let rows: Vec<OdRow> = read_records(r)?;
    let mut od = OdMatrix::default();
    for (k, row) in rows.into_iter().enumerate() {
        let group = match row.group.trim() {
            "*" | "" => None,
            g => Some(g.parse::<Socprof>().map_err(|e| parse_err(k + 2, e.to_string()))?),
        };
        od.insert(row.purpose, group, row.origin, parse_list(k + 2, &row.probs)?);
    }
    Ok(od)
}

pub fn write_od(w: impl Write, od: &OdMatrix) -> Result<()> {
    write_records(
        w,
        od.entries().into_iter().map(|(purpose, group, origin, probs)| OdRow {
            purpose,
            group: group.map_or("*".into(), |g| g.to_string()),
            origin,
            probs: format_list(probs),
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct WorkStudyRow {
    purpose: ActType,
    origin: u32,
    probs: String,
}

pub fn read_work_study(r: impl Read) -> Result<WorkStudyTable> {
    let rows: Vec<WorkStudyRow> = read_records(r)?;
    let mut t = WorkStudyTable::default();
    for (k, row) in rows.into_iter().enumerate() {
        let table = match row.purpose {
            ActType::Work => &mut t.work,
            ActType::Study => &mut t.study,
            other => return Err(parse_err(k + 2, format!("purpose {other} is not work or study"))),
        };
        let o = row.origin as usize;
        if table.len() <= o {
            table.resize(o + 1, Vec::new());
        }
        table[o] = parse_list(k + 2, &row.probs)?;
    }
    Ok(t)
}

pub fn write_work_study(w: impl Write, t: &WorkStudyTable) -> Result<()> {
    let rows = [(ActType::Work, &t.work), (ActType::Study, &t.study)]
        .into_iter()
        .flat_map(|(purpose, rows)| {
            rows.iter().enumerate().map(move |(o, r)| WorkStudyRow {
                purpose,
                origin: o as u32,
                probs: format_list(r),
            })
        });
    write_records(w, rows)
}

#[derive(Serialize, Deserialize)]
struct PlanRow {
    person: u32,
    element: String,
    kind: String,
    link: String,
    end_time: Option<Time>,
    route: String,
}

/// One selected plan per person, elements in order.
pub fn write_plans(w: impl Write, plans: &[(u32, &Plan)], net: &Network) -> Result<()> {
    let mut rows = Vec::new();
    for &(person, plan) in plans {
        for (k, a) in plan.activities.iter().enumerate() {
            rows.push(PlanRow {
                person,
                element: "act".into(),
                kind: a.kind.to_string(),
                link: net.link(a.link).id.clone(),
                end_time: a.end_time,
                route: String::new(),
            });
            if let Some(leg) = plan.legs.get(k) {
                rows.push(PlanRow {
                    person,
                    element: "leg".into(),
                    kind: leg.mode.to_string(),
                    link: String::new(),
                    end_time: None,
                    route: leg.route.iter().map(|&l| net.link(l).id.as_str()).collect::<Vec<_>>().join(" "),
                });
            }
        }
    }
    write_records(w, rows)
}

pub fn read_plans(r: impl Read, net: &Network) -> Result<Vec<(u32, Plan)>> {
    let rows: Vec<PlanRow> = read_records(r)?;
    let mut out: Vec<(u32, Plan)> = Vec::new();
    for (k, row) in rows.into_iter().enumerate() {
        let line = k + 2;
        if out.last().is_none_or(|(p, _)| *p != row.person) {
            out.push((
                row.person,
                Plan {
                    activities: Vec::new(),
                    legs: Vec::new(),
                    score: None,
                },
            ));
        }
        let plan = &mut out.last_mut().unwrap().1;
        match row.element.as_str() {
            "act" => plan.activities.push(Activity {
                kind: row.kind.parse().map_err(|e: crate::activity::UnknownActType| parse_err(line, e.to_string()))?,
                link: net.link_idx(&row.link).map_err(|e| parse_err(line, e.to_string()))?,
                end_time: row.end_time,
            }),
            "leg" => plan.legs.push(Leg {
                mode: row.kind.parse().map_err(|e: crate::mode::UnknownMode| parse_err(line, e.to_string()))?,
                route: row
                    .route
                    .split_whitespace()
                    .map(|id| net.link_idx(id).map_err(|e| parse_err(line, e.to_string())))
                    .collect::<Result<_>>()?,
            }),
            other => return Err(parse_err(line, format!("unknown element '{other}'"))),
        }
    }
    Ok(out)
}
