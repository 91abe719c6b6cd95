//! Long-format tables from an aggregated `kpi.csv`, one file per figure family.

use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One (scenario, fleet, metric, value) observation. Occupancy rows also carry the load `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRow {
    pub scenario: String,
    pub fleet: u32,
    pub metric: String,
    pub k: Option<u32>,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportTables {
    /// Tables in a fixed family order; families without data are left out.
    pub tables: Vec<(String, Vec<LongRow>)>,
    pub warnings: Vec<String>,
}

const FAMILIES: [(&str, &[&str]); 4] = [
    ("modal_split", &["legs", "share_car", "share_pt", "share_walk", "share_sav"]),
    (
        "service",
        &[
            "requests",
            "served",
            "rejected",
            "extended_rides",
            "wait_s_mean",
            "wait_s_p50",
            "wait_s_p90",
            "wait_s_max",
            "ivt_s_mean",
            "ivt_s_p50",
            "ivt_s_p90",
            "ivt_s_max",
            "detour_s_mean",
            "detour_s_p50",
            "detour_s_p90",
            "detour_s_max",
        ],
    ),
    (
        "fleet_usage",
        &[
            "in_service_mean",
            "in_service_peak",
            "rides_per_sav",
            "vehicle_km_mean",
            "vehicle_km_max",
        ],
    ),
    (
        "distance",
        &[
            "sav_km",
            "evk",
            "relocation_km",
            "empty_distance_ratio",
            "pkt",
            "car_km",
            "total_driven_km",
        ],
    ),
];

const KEYS: [&str; 6] = [
    "scenario",
    "fleet_size",
    "capacity",
    "ridesharing",
    "rebalancing",
    "fare_multiplier",
];

fn family_of(col: &str) -> &'static str {
    if col.starts_with("pax_occ_") {
        return "occupancy";
    }
    FAMILIES
        .iter()
        .find(|(_, cols)| cols.contains(&col))
        .map_or("other", |(f, _)| f)
}

/// Pivots every metric column of `kpi.csv` into long rows. A column with no
/// values in any row is omitted and reported in `warnings`.
pub fn build_report(input: impl Read) -> Result<ReportTables> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let scen = col("scenario").ok_or_else(|| Error::Config("kpi.csv: missing column 'scenario'".into()))?;
    let fleet = col("fleet_size").ok_or_else(|| Error::Config("kpi.csv: missing column 'fleet_size'".into()))?;
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let mut order: Vec<&str> = FAMILIES.iter().map(|f| f.0).collect();
    order.extend(["occupancy", "other"]);
    let mut tables: Vec<(String, Vec<LongRow>)> = order.iter().map(|f| (f.to_string(), Vec::new())).collect();
    let mut warnings = Vec::new();

    for (c, name) in headers.iter().enumerate() {
        if KEYS.contains(&name) {
            continue;
        }
        if records.iter().all(|r| r.get(c).is_none_or(|v| v.trim().is_empty())) {
            let msg = format!("column '{name}' has no values; omitted");
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let family = family_of(name);
        let k = name.strip_prefix("pax_occ_").and_then(|k| k.parse().ok());
        let table = &mut tables.iter_mut().find(|t| t.0 == family).expect("known family").1;
        for (line, r) in records.iter().enumerate() {
            let Some(v) = r.get(c).map(str::trim).filter(|v| !v.is_empty()) else {
                continue;
            };
            let bad = |what: &str| Error::Config(format!("kpi.csv row {}: bad {what}", line + 2));
            table.push(LongRow {
                scenario: r.get(scen).unwrap_or_default().to_string(),
                fleet: r.get(fleet).unwrap_or_default().trim().parse().map_err(|_| bad("fleet_size"))?,
                metric: if k.is_some() { "pax_occupancy".into() } else { name.to_string() },
                k,
                value: v.parse().map_err(|_| bad(name))?,
            });
        }
    }
    tables.retain(|t| !t.1.is_empty());
    Ok(ReportTables { tables, warnings })
}

/// Writes `<family>.csv` per table into `dir` and returns the paths.
pub fn write_report(dir: &Path, report: &ReportTables) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut paths = Vec::new();
    for (name, rows) in &report.tables {
        let path = dir.join(format!("{name}.csv"));
        let occupancy = rows.iter().any(|r| r.k.is_some());
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::file(&path, e))?;
        let mut header = vec!["scenario", "fleet", "metric"];
        if occupancy {
            header.push("k");
        }
        header.push("value");
        w.write_record(&header)?;
        for r in rows {
            let mut rec = vec![r.scenario.clone(), r.fleet.to_string(), r.metric.clone()];
            if occupancy {
                rec.push(r.k.map_or(String::new(), |k| k.to_string()));
            }
            rec.push(r.value.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::file(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
