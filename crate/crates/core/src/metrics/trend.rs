use std::fmt;

use serde::{Deserialize, Serialize};

use super::KpiReport;
use crate::mode::Mode;

/// Service configuration of one sweep grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fleet_size: u32,
    pub capacity: u32,
    pub ridesharing: bool,
    pub rebalancing: bool,
    pub fare_multiplier: f64,
}

impl SweepPoint {
    /// Scenario label in the style "rs4-reb" / "ind4".
    pub fn scenario(&self) -> String {
        format!(
            "{}{}{}{}",
            if self.ridesharing { "rs" } else { "ind" },
            self.capacity,
            if self.rebalancing { "-reb" } else { "" },
            if self.fare_multiplier != 1.0 {
                format!("-fare{}", self.fare_multiplier)
            } else {
                String::new()
            }
        )
    }
}

/// A drop between consecutive sweep values of a series expected to rise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inversion {
    pub from: f64,
    pub to: f64,
    pub drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Finding {
    /// Direction of a metric along a sweep variable.
    Monotonic {
        metric: String,
        over: String,
        points: Vec<(f64, f64)>,
        nondecreasing: bool,
        inversions: Vec<Inversion>,
    },
    /// Change of a metric when one setting is switched.
    Change {
        metric: String,
        context: String,
        before: f64,
        after: f64,
        delta: f64,
        /// `delta / |before|`; zero when `before` is zero.
        relative: f64,
    },
}

impl Finding {
    pub fn metric(&self) -> &str {
        match self {
            Finding::Monotonic { metric, .. } | Finding::Change { metric, .. } => metric,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::Monotonic {
                metric,
                over,
                nondecreasing,
                inversions,
                ..
            } => {
                write!(f, "{metric} vs {over}: nondecreasing: {nondecreasing}")?;
                if !inversions.is_empty() {
                    let worst = inversions.iter().map(|i| i.drop).fold(0.0, f64::max);
                    write!(f, " ({} inversions, largest {worst:.3})", inversions.len())?;
                }
                Ok(())
            }
            Finding::Change {
                metric,
                context,
                before,
                after,
                relative,
                ..
            } => {
                let dir = if after < before {
                    "decrease"
                } else if after > before {
                    "increase"
                } else {
                    "unchanged"
                };
                write!(
                    f,
                    "{metric} {context}: {before:.4} -> {after:.4}, {dir}: {:.1}%",
                    100.0 * relative.abs()
                )
            }
        }
    }
}

/// Direction verdict for `(x, y)` points sorted by `x`.
pub fn series_trend(metric: &str, over: &str, points: &[(f64, f64)]) -> Finding {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let inversions: Vec<Inversion> = pts
        .windows(2)
        .filter(|w| w[1].1 < w[0].1)
        .map(|w| Inversion {
            from: w[0].0,
            to: w[1].0,
            drop: w[0].1 - w[1].1,
        })
        .collect();
    Finding::Monotonic {
        metric: metric.into(),
        over: over.into(),
        nondecreasing: inversions.is_empty(),
        inversions,
        points: pts,
    }
}

pub fn change(metric: &str, context: &str, before: f64, after: f64) -> Finding {
    let delta = after - before;
    Finding::Change {
        metric: metric.into(),
        context: context.into(),
        before,
        after,
        delta,
        relative: if before != 0.0 { delta / before.abs() } else { 0.0 },
    }
}

/// Verdicts over a sweep: SAV share along fleet size per scenario, and the
/// effect of switching rebalancing and ridesharing at matched settings.
pub fn trend_compare(runs: &[(SweepPoint, KpiReport)]) -> Vec<Finding> {
    let mut out = Vec::new();
    if runs.len() < 2 {
        return out;
    }
    let same_except = |a: &SweepPoint, b: &SweepPoint, field: &str| {
        (field == "fleet" || a.fleet_size == b.fleet_size)
            && (field == "capacity" || a.capacity == b.capacity)
            && (field == "ridesharing" || a.ridesharing == b.ridesharing)
            && (field == "rebalancing" || a.rebalancing == b.rebalancing)
            && (field == "fare" || a.fare_multiplier == b.fare_multiplier)
    };

    let mut scenarios: Vec<&SweepPoint> = Vec::new();
    for (p, _) in runs {
        if !scenarios.iter().any(|s| same_except(s, p, "fleet")) {
            scenarios.push(p);
        }
    }
    for s in scenarios {
        let pts: Vec<(f64, f64)> = runs
            .iter()
            .filter(|(p, _)| same_except(s, p, "fleet"))
            .map(|(p, r)| (p.fleet_size as f64, r.modal_split.get(Mode::Sav)))
            .collect();
        if pts.len() >= 2 {
            out.push(series_trend(&format!("sav share {}", s.scenario()), "fleet", &pts));
        }
    }

    for (a, ra) in runs.iter().filter(|(p, _)| !p.rebalancing) {
        for (b, rb) in runs.iter().filter(|(p, _)| p.rebalancing) {
            if same_except(a, b, "rebalancing") {
                let ctx = format!("{} fleet {}, rebalancing off -> on", a.scenario(), a.fleet_size);
                out.push(change("mean wait s", &ctx, ra.wait_s.mean, rb.wait_s.mean));
                out.push(change("empty distance ratio", &ctx, ra.empty_distance_ratio, rb.empty_distance_ratio));
            }
        }
    }
    for (a, ra) in runs.iter().filter(|(p, _)| !p.ridesharing) {
        for (b, rb) in runs.iter().filter(|(p, _)| p.ridesharing) {
            if same_except(a, b, "ridesharing") {
                let ctx = format!("fleet {}, individual -> ridesharing", a.fleet_size);
                out.push(change("total driven km", &ctx, ra.total_driven_km, rb.total_driven_km));
            }
        }
    }
    out
}
