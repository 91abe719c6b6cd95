//! Synthetic inputs for the bundled toy cities.
//!
//! Nothing here is calibrated: the seed sample, zone marginals, chain
//! templates and destination tables are plausible inventions so that a run
//! needs no external data. Zone marginals are tallied from a zone-biased
//! draw of the seed, which keeps the three controlled attributes mutually
//! consistent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_population, ActTiming, Attribute, ChainTemplate, Gender, OdMatrix, PopulationError, PopulationInputs,
    SeedPerson, Socprof, SyntheticPopulation, TemplateSet, WorkStudyTable, ZoneControls, ZoneMap,
};
use crate::activity::ActType;
use crate::network::Network;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySpec {
    pub agents: u32,
    pub zones_x: usize,
    pub zones_y: usize,
    pub seed_size: usize,
    /// Target maximum relative error of the zone fit.
    pub epsilon: f64,
    /// Beeline distance above which non-owners start on transit.
    pub walk_limit_m: f64,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            agents: 10_000,
            zones_x: 4,
            zones_y: 4,
            seed_size: 3000,
            epsilon: 0.05,
            walk_limit_m: 1500.0,
        }
    }
}

impl ToySpec {
    /// About 1500 agents in four zones; used by tests and the browser demo.
    pub fn small() -> Self {
        ToySpec {
            agents: 1500,
            zones_x: 2,
            zones_y: 2,
            seed_size: 1500,
            ..ToySpec::default()
        }
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[(T, f64)]) -> T {
    let total: f64 = items.iter().map(|x| x.1).sum();
    let mut u = rng.random::<f64>() * total;
    for &(x, w) in items {
        if u < w {
            return x;
        }
        u -= w;
    }
    items.last().unwrap().0
}

fn seed_sample(n: usize, rng: &mut impl Rng) -> Vec<SeedPerson> {
    use Socprof::*;
    (0..n)
        .map(|_| {
            let band = pick(rng, &[(0usize, 0.15), (1, 0.15), (2, 0.27), (3, 0.25), (4, 0.18)]);
            let (lo, hi) = [(0, 13), (14, 24), (25, 44), (45, 64), (65, 90)][band];
            let age = rng.random_range(lo..=hi);
            let gender = if rng.random_bool(0.5) { Gender::M } else { Gender::F };
            let socprof = match band {
                0 => Child,
                1 => pick(rng, &[(Student, 0.7), (Employed, 0.2), (Unemployed, 0.1)]),
                2 => pick(rng, &[(Employed, 0.75), (Unemployed, 0.1), (Homemaker, 0.1), (Student, 0.05)]),
                3 => pick(rng, &[(Employed, 0.75), (Unemployed, 0.12), (Homemaker, 0.13)]),
                _ => pick(rng, &[(Retired, 0.9), (Homemaker, 0.1)]),
            };
            let income = if socprof == Employed {
                pick(rng, &[(1u8, 0.15), (2, 0.3), (3, 0.3), (4, 0.25)])
            } else {
                pick(rng, &[(1u8, 0.35), (2, 0.35), (3, 0.2), (4, 0.1)])
            };
            let car_owner = age >= 18 && rng.random_bool([0.45, 0.6, 0.72, 0.82][income as usize - 1]);
            SeedPerson {
                age,
                gender,
                income,
                socprof,
                car_owner,
            }
        })
        .collect()
}

/// Largest-remainder split of `total` proportional to `weights`.
fn apportion(total: u32, weights: &[f64]) -> Vec<u32> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u32> = exact.iter().map(|x| x.floor() as u32).collect();
    let mut rest: Vec<usize> = (0..weights.len()).collect();
    rest.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = total - out.iter().sum::<u32>();
    for &k in rest.iter().take(missing as usize) {
        out[k] += 1;
    }
    out
}

fn controls(seed: &[SeedPerson], zones: usize, agents: u32, rng: &mut impl Rng) -> Vec<ZoneControls> {
    let weights: Vec<f64> = (0..zones).map(|_| rng.random_range(0.7..1.3)).collect();
    let totals = apportion(agents, &weights);
    totals
        .iter()
        .enumerate()
        .map(|(z, &n)| {
            // zone character: tilt towards some income bands and age bands
            let income_tilt: Vec<f64> = (0..4).map(|_| rng.random_range(0.6..1.4)).collect();
            let age_tilt: Vec<f64> = (0..5).map(|_| rng.random_range(0.8..1.2)).collect();
            let w: Vec<f64> = seed
                .iter()
                .map(|s| income_tilt[s.income as usize - 1] * age_tilt[super::age_band(s.age)])
                .collect();
            let total_w: f64 = w.iter().sum();
            let mut c = ZoneControls {
                zone: z as u32,
                age_gender: vec![0; Attribute::AgeGender.levels()],
                income: vec![0; Attribute::Income.levels()],
                socprof: vec![0; Attribute::Socprof.levels()],
            };
            for _ in 0..n {
                let mut u = rng.random::<f64>() * total_w;
                let mut i = 0;
                while i + 1 < w.len() && u >= w[i] {
                    u -= w[i];
                    i += 1;
                }
                let s = &seed[i];
                c.age_gender[Attribute::AgeGender.level_of(s.age, s.gender, s.income, s.socprof)] += 1;
                c.income[s.income as usize - 1] += 1;
                c.socprof[s.socprof.index()] += 1;
            }
            c
        })
        .collect()
}

fn templates() -> Vec<ChainTemplate> {
    use ActType::*;
    use Socprof::*;
    let t = ActTiming::new;
    let mk = |id: &str, group, probability, acts: &[ActType], timings: Vec<ActTiming>| ChainTemplate {
        id: id.to_string(),
        group,
        probability,
        acts: acts.to_vec(),
        timings,
    };
    vec![
        mk("emp_hwh", Employed, 0.5, &[Home, Work, Home], vec![t(0.0, 0.0, 7.5, 0.75), t(8.2, 0.7, 8.5, 1.0)]),
        mk(
            "emp_hwsh",
            Employed,
            0.15,
            &[Home, Work, Shop, Home],
            vec![t(0.0, 0.0, 7.5, 0.75), t(8.2, 0.7, 8.3, 0.8), t(17.2, 0.8, 0.6, 0.3)],
        ),
        mk(
            "emp_hwhlh",
            Employed,
            0.1,
            &[Home, Work, Home, Leisure, Home],
            vec![t(0.0, 0.0, 7.5, 0.75), t(8.2, 0.7, 8.5, 1.0), t(17.2, 0.8, 1.5, 0.5), t(19.5, 0.8, 2.0, 0.7)],
        ),
        mk(
            "emp_hewh",
            Employed,
            0.1,
            &[Home, Escort, Work, Home],
            vec![t(0.0, 0.0, 7.6, 0.4), t(8.0, 0.3, 0.2, 0.1), t(8.5, 0.4, 8.5, 0.8)],
        ),
        mk(
            "emp_hwfwh",
            Employed,
            0.1,
            &[Home, Work, Eat, Work, Home],
            vec![t(0.0, 0.0, 7.5, 0.75), t(8.2, 0.7, 3.8, 0.5), t(12.1, 0.4, 1.0, 0.3), t(13.3, 0.4, 4.3, 0.6)],
        ),
        mk("emp_hlh", Employed, 0.05, &[Home, Leisure, Home], vec![t(0.0, 0.0, 9.5, 1.5), t(10.0, 1.5, 3.0, 1.0)]),
        mk("stu_hsh", Student, 0.6, &[Home, Study, Home], vec![t(0.0, 0.0, 7.7, 0.5), t(8.2, 0.5, 6.5, 1.0)]),
        mk(
            "stu_hslh",
            Student,
            0.2,
            &[Home, Study, Leisure, Home],
            vec![t(0.0, 0.0, 7.7, 0.5), t(8.2, 0.5, 6.0, 1.0), t(14.8, 1.0, 2.0, 0.7)],
        ),
        mk(
            "stu_hshlh",
            Student,
            0.1,
            &[Home, Study, Home, Leisure, Home],
            vec![t(0.0, 0.0, 7.7, 0.5), t(8.2, 0.5, 6.5, 1.0), t(15.2, 1.0, 3.0, 1.0), t(19.5, 1.0, 2.5, 0.8)],
        ),
        mk("stu_hph", Student, 0.1, &[Home, Shop, Home], vec![t(0.0, 0.0, 10.0, 1.5), t(10.5, 1.5, 1.0, 0.4)]),
        mk("chi_hsh", Child, 0.85, &[Home, Study, Home], vec![t(0.0, 0.0, 7.8, 0.3), t(8.3, 0.3, 7.5, 0.5)]),
        mk(
            "chi_hslh",
            Child,
            0.15,
            &[Home, Study, Leisure, Home],
            vec![t(0.0, 0.0, 7.8, 0.3), t(8.3, 0.3, 7.5, 0.5), t(16.0, 0.5, 1.5, 0.5)],
        ),
        mk("une_hrh", Unemployed, 0.3, &[Home, Errand, Home], vec![t(0.0, 0.0, 9.5, 1.5), t(10.0, 1.5, 1.0, 0.5)]),
        mk("une_hph", Unemployed, 0.3, &[Home, Shop, Home], vec![t(0.0, 0.0, 10.0, 1.5), t(10.5, 1.5, 1.0, 0.5)]),
        mk("une_hlh", Unemployed, 0.2, &[Home, Leisure, Home], vec![t(0.0, 0.0, 13.0, 2.0), t(13.5, 2.0, 2.5, 1.0)]),
        mk(
            "une_hplh",
            Unemployed,
            0.2,
            &[Home, Shop, Leisure, Home],
            vec![t(0.0, 0.0, 10.0, 1.5), t(10.5, 1.5, 1.0, 0.4), t(12.0, 1.5, 2.0, 0.8)],
        ),
        mk("ret_hph", Retired, 0.35, &[Home, Shop, Home], vec![t(0.0, 0.0, 9.5, 1.2), t(10.0, 1.2, 1.2, 0.4)]),
        mk("ret_hlh", Retired, 0.3, &[Home, Leisure, Home], vec![t(0.0, 0.0, 13.5, 1.5), t(14.0, 1.5, 2.5, 0.8)]),
        mk(
            "ret_hrph",
            Retired,
            0.2,
            &[Home, Errand, Shop, Home],
            vec![t(0.0, 0.0, 9.5, 1.0), t(10.0, 1.0, 0.8, 0.3), t(11.0, 1.0, 1.0, 0.4)],
        ),
        mk("ret_hfh", Retired, 0.15, &[Home, Eat, Home], vec![t(0.0, 0.0, 11.8, 0.5), t(12.2, 0.5, 1.5, 0.4)]),
        mk(
            "hom_hehph",
            Homemaker,
            0.3,
            &[Home, Escort, Home, Shop, Home],
            vec![t(0.0, 0.0, 7.8, 0.3), t(8.2, 0.3, 0.2, 0.1), t(8.6, 0.3, 1.5, 0.5), t(10.5, 1.0, 1.0, 0.4)],
        ),
        mk("hom_hph", Homemaker, 0.3, &[Home, Shop, Home], vec![t(0.0, 0.0, 9.5, 1.2), t(10.0, 1.2, 1.2, 0.4)]),
        mk(
            "hom_herh",
            Homemaker,
            0.2,
            &[Home, Escort, Errand, Home],
            vec![t(0.0, 0.0, 7.8, 0.3), t(8.2, 0.3, 0.2, 0.1), t(8.8, 0.4, 1.0, 0.4)],
        ),
        mk("hom_hlh", Homemaker, 0.2, &[Home, Leisure, Home], vec![t(0.0, 0.0, 13.5, 1.5), t(14.0, 1.5, 2.0, 0.8)]),
    ]
}

/// Zone centroids as the mean of link midpoints.
fn centroids(net: &Network, zones: &ZoneMap) -> Vec<(f64, f64)> {
    (0..zones.num_zones() as u32)
        .map(|z| {
            let links = zones.links(z);
            let n = links.len().max(1) as f64;
            let (sx, sy) = links.iter().fold((0.0, 0.0), |(sx, sy), &l| {
                let (x, y) = net.link_coord(l);
                (sx + x, sy + y)
            });
            (sx / n, sy / n)
        })
        .collect()
}

fn gravity(cents: &[(f64, f64)], from: usize, attraction: &[f64], scale_m: f64) -> Vec<f64> {
    let (fx, fy) = cents[from];
    let w: Vec<f64> = cents
        .iter()
        .zip(attraction)
        .map(|(&(x, y), a)| a * (-(x - fx).hypot(y - fy) / scale_m).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter().map(|x| x / sum).collect()
}

/// Everything a population build needs, generated for `net`.
pub fn inputs(net: &Network, spec: &ToySpec, seed: u64) -> Result<PopulationInputs, PopulationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zones = ZoneMap::grid(net, spec.zones_x, spec.zones_y);
    let n = zones.num_zones();
    let sample = seed_sample(spec.seed_size, &mut rng);
    let controls = controls(&sample, n, spec.agents, &mut rng);
    let cents = centroids(net, &zones);
    // central zones attract work and amenities
    let (bx0, by0, bx1, by1) = net.bounds();
    let (cx, cy) = ((bx0 + bx1) / 2.0, (by0 + by1) / 2.0);
    let radius = ((bx1 - bx0).hypot(by1 - by0) / 2.0).max(1.0);
    let centrality: Vec<f64> = cents
        .iter()
        .map(|&(x, y)| 1.0 + 2.0 * (1.0 - (x - cx).hypot(y - cy) / radius).max(0.0))
        .collect();
    let flat = vec![1.0; n];
    let work_study = WorkStudyTable {
        work: (0..n).map(|z| gravity(&cents, z, &centrality, 4000.0)).collect(),
        study: (0..n).map(|z| gravity(&cents, z, &flat, 1500.0)).collect(),
    };
    let mut od = OdMatrix::default();
    for (purpose, scale, central) in [
        (ActType::Shop, 1500.0, true),
        (ActType::Errand, 1500.0, false),
        (ActType::Escort, 1000.0, false),
        (ActType::Leisure, 3000.0, true),
        (ActType::Eat, 2000.0, true),
    ] {
        let attraction = if central { &centrality } else { &flat };
        for z in 0..n {
            od.insert(purpose, None, z as u32, gravity(&cents, z, attraction, scale));
        }
    }
    Ok(PopulationInputs {
        zones,
        seed: sample,
        controls,
        templates: TemplateSet::new(templates())?,
        work_study,
        od,
    })
}

/// Toy inputs followed by a full population build.
pub fn generate(net: &Network, spec: &ToySpec, seed: u64) -> Result<SyntheticPopulation, PopulationError> {
    let inputs = inputs(net, spec, seed)?;
    build_population(net, &inputs, spec.epsilon, spec.walk_limit_m, seed)
}
