use std::io::Write;

use super::{Distribution, KpiReport, SweepPoint};

/// Writes the full report as pretty JSON with a trailing newline.
pub fn write_kpi_json<W: Write>(mut w: W, report: &KpiReport) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)
}

fn push_dist(cols: &mut Vec<(String, f64)>, name: &str, d: &Distribution) {
    for (k, v) in [("mean", d.mean), ("p50", d.p50), ("p90", d.p90), ("max", d.max)] {
        cols.push((format!("{name}_{k}"), v));
    }
}

/// Scalar indicators as named columns. Occupancy shares are spread over
/// `pax_occ_<k>` columns, one per observed load.
pub fn flat_columns(r: &KpiReport) -> Vec<(String, f64)> {
    let mut c: Vec<(String, f64)> = vec![
        ("legs".into(), r.legs as f64),
        ("share_car".into(), r.modal_split.car),
        ("share_pt".into(), r.modal_split.pt),
        ("share_walk".into(), r.modal_split.walk),
        ("share_sav".into(), r.modal_split.sav),
        ("in_service_mean".into(), r.in_service_mean),
        (
            "in_service_peak".into(),
            r.in_service_rate.iter().copied().fold(0.0, f64::max),
        ),
        ("sav_km".into(), r.sav_km),
        ("evk".into(), r.evk),
        ("relocation_km".into(), r.relocation_km),
        ("empty_distance_ratio".into(), r.empty_distance_ratio),
        ("pkt".into(), r.pkt),
        ("requests".into(), r.requests as f64),
        ("served".into(), r.served as f64),
        ("rejected".into(), r.rejected as f64),
        ("extended_rides".into(), r.extended_rides as f64),
    ];
    push_dist(&mut c, "wait_s", &r.wait_s);
    push_dist(&mut c, "ivt_s", &r.ivt_s);
    push_dist(&mut c, "detour_s", &r.detour_s);
    c.extend([
        ("rides_per_sav".into(), r.rides_per_sav),
        ("vehicle_km_mean".into(), r.vehicle_km_mean),
        ("vehicle_km_max".into(), r.vehicle_km_max),
        ("car_km".into(), r.car_km),
        ("total_driven_km".into(), r.total_driven_km),
    ]);
    for (k, s) in r.pax_occupancy.iter().enumerate() {
        c.push((format!("pax_occ_{}", k + 1), *s));
    }
    c
}

const KEY_COLUMNS: [&str; 6] = [
    "scenario",
    "fleet_size",
    "capacity",
    "ridesharing",
    "rebalancing",
    "fare_multiplier",
];

/// One row per run. Metric columns are the union over all rows in
/// first-seen order; a metric a row lacks is left empty.
pub fn write_kpi_csv<W: Write>(w: W, rows: &[(SweepPoint, KpiReport)]) -> csv::Result<()> {
    let flat: Vec<Vec<(String, f64)>> = rows.iter().map(|(_, r)| flat_columns(r)).collect();
    let mut names: Vec<&str> = Vec::new();
    for cols in &flat {
        for (n, _) in cols {
            if !names.contains(&n.as_str()) {
                names.push(n);
            }
        }
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(KEY_COLUMNS.iter().copied().chain(names.iter().copied()))?;
    for ((p, _), cols) in rows.iter().zip(&flat) {
        let mut rec = vec![
            p.scenario(),
            p.fleet_size.to_string(),
            p.capacity.to_string(),
            p.ridesharing.to_string(),
            p.rebalancing.to_string(),
            p.fare_multiplier.to_string(),
        ];
        for n in &names {
            rec.push(
                cols.iter()
                    .find(|(c, _)| c == n)
                    .map_or(String::new(), |(_, v)| v.to_string()),
            );
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
