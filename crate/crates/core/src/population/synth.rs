use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{age_band, Gender, Person, PopulationError, Socprof, NUM_AGE_BANDS, NUM_INCOME_BANDS};

/// A controlled attribute. Levels are indexed per attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    /// Age band x gender, index `band * 2 + gender`.
    AgeGender,
    /// Income band 1..=4 at index 0..=3.
    Income,
    Socprof,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::AgeGender, Attribute::Income, Attribute::Socprof];

    pub fn levels(self) -> usize {
        match self {
            Attribute::AgeGender => NUM_AGE_BANDS * 2,
            Attribute::Income => NUM_INCOME_BANDS,
            Attribute::Socprof => Socprof::ALL.len(),
        }
    }

    fn offset(self) -> usize {
        match self {
            Attribute::AgeGender => 0,
            Attribute::Income => NUM_AGE_BANDS * 2,
            Attribute::Socprof => NUM_AGE_BANDS * 2 + NUM_INCOME_BANDS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::AgeGender => "age_gender",
            Attribute::Income => "income",
            Attribute::Socprof => "socprof",
        }
    }

    pub fn level_name(self, level: usize) -> String {
        const BANDS: [&str; NUM_AGE_BANDS] = ["0-13", "14-24", "25-44", "45-64", "65+"];
        match self {
            Attribute::AgeGender => {
                let g = if level % 2 == 0 { "m" } else { "f" };
                format!("age {} {g}", BANDS[level / 2])
            }
            Attribute::Income => format!("income band {}", level + 1),
            Attribute::Socprof => format!("group {}", Socprof::ALL[level]),
        }
    }

    pub fn level_of(self, age: u32, gender: Gender, income: u8, socprof: Socprof) -> usize {
        match self {
            Attribute::AgeGender => age_band(age) * 2 + usize::from(gender == Gender::F),
            Attribute::Income => (income.clamp(1, 4) - 1) as usize,
            Attribute::Socprof => socprof.index(),
        }
    }
}

const NUM_LEVELS: usize = NUM_AGE_BANDS * 2 + NUM_INCOME_BANDS + 6;

/// One record of the seed sample (survey or census microdata).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPerson {
    pub age: u32,
    pub gender: Gender,
    pub income: u8,
    pub socprof: Socprof,
    pub car_owner: bool,
}

impl SeedPerson {
    fn levels(&self) -> [usize; 3] {
        Attribute::ALL.map(|a| a.offset() + a.level_of(self.age, self.gender, self.income, self.socprof))
    }
}

/// Marginal counts of one zone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneControls {
    pub zone: u32,
    pub age_gender: Vec<u32>,
    pub income: Vec<u32>,
    pub socprof: Vec<u32>,
}

impl ZoneControls {
    pub fn get(&self, attr: Attribute) -> &[u32] {
        match attr {
            Attribute::AgeGender => &self.age_gender,
            Attribute::Income => &self.income,
            Attribute::Socprof => &self.socprof,
        }
    }

    /// Zone population: the rounded mean of the per-attribute totals.
    pub fn total(&self) -> u32 {
        let sum: u32 = Attribute::ALL.iter().map(|&a| self.get(a).iter().sum::<u32>()).sum();
        (sum as f64 / 3.0).round() as u32
    }

    pub fn validate(&self) -> Result<(), PopulationError> {
        let fail = |message: String| {
            Err(PopulationError::InvalidControls {
                zone: self.zone,
                message,
            })
        };
        for a in Attribute::ALL {
            if self.get(a).len() != a.levels() {
                return fail(format!("{} has {} levels, expected {}", a.as_str(), self.get(a).len(), a.levels()));
            }
        }
        let totals: Vec<u32> = Attribute::ALL.iter().map(|&a| self.get(a).iter().sum()).collect();
        let (lo, hi) = (*totals.iter().min().unwrap(), *totals.iter().max().unwrap());
        // rounding of independently scaled marginals may differ by a few persons
        if hi - lo > 2 + hi / 100 {
            return fail(format!("attribute totals disagree: {totals:?}"));
        }
        Ok(())
    }

    fn targets(&self) -> [f64; NUM_LEVELS] {
        let mut t = [0.0; NUM_LEVELS];
        for a in Attribute::ALL {
            for (k, &c) in self.get(a).iter().enumerate() {
                t[a.offset() + k] = c as f64;
            }
        }
        t
    }
}

/// Relative error |synthetic - control| / max(control, 1).
fn rel_error(synthetic: f64, control: f64) -> f64 {
    (synthetic - control).abs() / control.max(1.0)
}

#[derive(Clone, Copy, PartialEq, PartialOrd, Debug)]
struct Fit {
    max_rel: f64,
    sum_abs: f64,
}

fn fit(counts: &[i64; NUM_LEVELS], target: &[f64; NUM_LEVELS]) -> Fit {
    let mut f = Fit {
        max_rel: 0.0,
        sum_abs: 0.0,
    };
    for k in 0..NUM_LEVELS {
        f.max_rel = f.max_rel.max(rel_error(counts[k] as f64, target[k]));
        f.sum_abs += (counts[k] as f64 - target[k]).abs();
    }
    f
}

fn better(a: Fit, b: Fit) -> bool {
    const TOL: f64 = 1e-12;
    a.max_rel < b.max_rel - TOL || (a.max_rel <= b.max_rel + TOL && a.sum_abs < b.sum_abs - TOL)
}

/// Fits each zone's pool to its marginals by greedy swaps from the seed.
///
/// Zones run independently on sub-streams of `seed`; the result is the
/// concatenation in zone order with ids numbered from 0.
pub fn synthesize(
    sample: &[SeedPerson],
    controls: &[ZoneControls],
    epsilon: f64,
    seed: u64,
) -> Result<Vec<Person>, PopulationError> {
    if sample.is_empty() {
        return Err(PopulationError::EmptySeed);
    }
    let levels: Vec<[usize; 3]> = sample.iter().map(SeedPerson::levels).collect();
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); NUM_LEVELS];
    for (i, lv) in levels.iter().enumerate() {
        for &l in lv {
            by_level[l].push(i);
        }
    }
    for c in controls {
        c.validate()?;
        let target = c.targets();
        for a in Attribute::ALL {
            for k in 0..a.levels() {
                if target[a.offset() + k] > 0.0 && by_level[a.offset() + k].is_empty() {
                    return Err(PopulationError::MissingCategory(a.level_name(k)));
                }
            }
        }
    }

    let pools: Vec<Vec<usize>> = controls
        .par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c.zone as u64);
            let pool = fit_zone(&levels, &by_level, &c.targets(), c.total() as usize, &mut rng);
            let counts = count(&levels, &pool);
            let f = fit(&counts, &c.targets());
            if f.max_rel > epsilon {
                log::warn!("zone {}: max relative error {:.3} above {:.3}", c.zone, f.max_rel, epsilon);
            }
            pool
        })
        .collect();

    let mut out = Vec::new();
    for (c, pool) in controls.iter().zip(pools) {
        for i in pool {
            let s = &sample[i];
            out.push(Person {
                id: out.len() as u32,
                age: s.age,
                gender: s.gender,
                income: s.income,
                socprof: s.socprof,
                car_owner: s.car_owner,
                home_zone: c.zone,
            });
        }
    }
    Ok(out)
}

fn count(levels: &[[usize; 3]], pool: &[usize]) -> [i64; NUM_LEVELS] {
    let mut counts = [0i64; NUM_LEVELS];
    for &i in pool {
        for &l in &levels[i] {
            counts[l] += 1;
        }
    }
    counts
}

fn fit_zone(
    levels: &[[usize; 3]],
    by_level: &[Vec<usize>],
    target: &[f64; NUM_LEVELS],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    const REMOVALS: usize = 4;
    const CANDIDATES: usize = 24;
    if n == 0 {
        return Vec::new();
    }
    let mut pool: Vec<usize> = (0..n).map(|_| rng.random_range(0..levels.len())).collect();
    let mut counts = count(levels, &pool);
    let mut current = fit(&counts, target);
    let mut stall = 0;
    let max_stall = 200 + 4 * n;
    let mut rounds = 0;
    while current.sum_abs > 0.0 && stall < max_stall && rounds < 100 * n {
        rounds += 1;
        // the worst level, ties to the lowest index; random when stalling
        let worst = if stall % 4 == 0 {
            (0..NUM_LEVELS)
                .max_by(|&a, &b| {
                    rel_error(counts[a] as f64, target[a])
                        .total_cmp(&rel_error(counts[b] as f64, target[b]))
                        .then(b.cmp(&a))
                })
                .unwrap()
        } else {
            rng.random_range(0..NUM_LEVELS)
        };
        let over = counts[worst] as f64 > target[worst];
        if !over && by_level[worst].is_empty() {
            stall += 1;
            continue;
        }
        let mut best: Option<(usize, usize, Fit)> = None;
        for _ in 0..REMOVALS {
            let pos = rng.random_range(0..n);
            if levels[pool[pos]].contains(&worst) != over {
                continue;
            }
            for _ in 0..CANDIDATES {
                let cand = if over {
                    rng.random_range(0..levels.len())
                } else {
                    *by_level[worst].choose(rng).unwrap()
                };
                let mut c = counts;
                for &l in &levels[pool[pos]] {
                    c[l] -= 1;
                }
                for &l in &levels[cand] {
                    c[l] += 1;
                }
                let f = fit(&c, target);
                if better(f, best.map_or(current, |b| b.2)) {
                    best = Some((pos, cand, f));
                }
            }
        }
        match best {
            Some((pos, cand, f)) => {
                for &l in &levels[pool[pos]] {
                    counts[l] -= 1;
                }
                for &l in &levels[cand] {
                    counts[l] += 1;
                }
                pool[pos] = cand;
                current = f;
                stall = 0;
            }
            None => stall += 1,
        }
    }
    pool.sort_unstable();
    pool
}

/// Per zone x attribute level comparison of synthetic and control counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub zone: u32,
    pub attribute: Attribute,
    pub level: usize,
    pub synthetic: u32,
    pub control: u32,
    pub relative_error: f64,
}

impl ErrorReport {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.relative_error).fold(0.0, f64::max)
    }
}

pub fn validate_synthesis(persons: &[Person], controls: &[ZoneControls]) -> ErrorReport {
    let mut rows = Vec::new();
    for c in controls {
        let mut counts = [0u32; NUM_LEVELS];
        for p in persons.iter().filter(|p| p.home_zone == c.zone) {
            for a in Attribute::ALL {
                counts[a.offset() + a.level_of(p.age, p.gender, p.income, p.socprof)] += 1;
            }
        }
        for a in Attribute::ALL {
            for (k, &control) in c.get(a).iter().enumerate() {
                let synthetic = counts[a.offset() + k];
                rows.push(ErrorRow {
                    zone: c.zone,
                    attribute: a,
                    level: k,
                    synthetic,
                    control,
                    relative_error: rel_error(synthetic as f64, control as f64),
                });
            }
        }
    }
    ErrorReport { rows }
}
