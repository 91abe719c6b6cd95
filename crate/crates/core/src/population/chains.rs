use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Person, PopulationError, Socprof};
use crate::activity::ActType;
use crate::Time;

/// Normal start-time and duration profile of one activity, seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActTiming {
    pub start_mean: f64,
    pub start_sd: f64,
    pub dur_mean: f64,
    pub dur_sd: f64,
}

impl ActTiming {
    pub fn new(start_h: f64, start_sd_h: f64, dur_h: f64, dur_sd_h: f64) -> Self {
        ActTiming {
            start_mean: start_h * 3600.0,
            start_sd: start_sd_h * 3600.0,
            dur_mean: dur_h * 3600.0,
            dur_sd: dur_sd_h * 3600.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTemplate {
    pub id: String,
    pub group: Socprof,
    pub probability: f64,
    pub acts: Vec<ActType>,
    /// One entry per activity except the last. The first (home) activity
    /// starts at midnight, so only its duration matters.
    pub timings: Vec<ActTiming>,
}

/// Templates indexed by group, with per-group probabilities summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateSet {
    templates: Vec<ChainTemplate>,
    by_group: Vec<Vec<usize>>,
}

impl TemplateSet {
    pub fn new(templates: Vec<ChainTemplate>) -> Result<Self, PopulationError> {
        let mut by_group = vec![Vec::new(); Socprof::ALL.len()];
        for (k, t) in templates.iter().enumerate() {
            let fail = |message: &str| {
                Err(PopulationError::InvalidTemplate {
                    id: t.id.clone(),
                    message: message.to_string(),
                })
            };
            if t.acts.len() < 2 || t.acts[0] != ActType::Home || *t.acts.last().unwrap() != ActType::Home {
                return fail("chains must start and end at home");
            }
            if t.timings.len() + 1 != t.acts.len() {
                return fail("one timing per activity except the last");
            }
            if !(t.probability >= 0.0 && t.probability <= 1.0) {
                return fail("probability outside [0, 1]");
            }
            if t.timings.iter().any(|x| x.start_sd < 0.0 || x.dur_sd < 0.0 || x.dur_mean < 0.0) {
                return fail("negative duration or spread");
            }
            by_group[t.group.index()].push(k);
        }
        for (g, list) in by_group.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let sum: f64 = list.iter().map(|&k| templates[k].probability).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(PopulationError::InvalidTemplate {
                    id: format!("group {}", Socprof::ALL[g]),
                    message: format!("probabilities sum to {sum}"),
                });
            }
        }
        Ok(TemplateSet { templates, by_group })
    }

    pub fn templates(&self) -> &[ChainTemplate] {
        &self.templates
    }

    pub fn for_group(&self, group: Socprof) -> impl Iterator<Item = &ChainTemplate> {
        self.by_group[group.index()].iter().map(|&k| &self.templates[k])
    }
}

/// An activity sequence with sampled end times (all but the last activity).
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub template: String,
    pub acts: Vec<ActType>,
    pub end_times: Vec<Time>,
}

fn normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("validated spread").sample(rng)
}

/// Draws a template from the person's group and samples its times.
pub fn allocate_chain(person: &Person, set: &TemplateSet, rng: &mut impl Rng) -> Result<Chain, PopulationError> {
    let list = &set.by_group[person.socprof.index()];
    if list.is_empty() {
        return Err(PopulationError::NoTemplate(person.socprof));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = *list.last().unwrap();
    for &k in list {
        acc += set.templates[k].probability;
        if u < acc {
            pick = k;
            break;
        }
    }
    let t = &set.templates[pick];
    let mut end_times = Vec::with_capacity(t.timings.len());
    let mut prev: Time = 0;
    for (k, timing) in t.timings.iter().enumerate() {
        let start = if k == 0 {
            0.0
        } else {
            normal(rng, timing.start_mean, timing.start_sd)
        };
        let dur = normal(rng, timing.dur_mean, timing.dur_sd).max(0.0);
        let end = ((start + dur).round() as Time).max(prev + 1);
        end_times.push(end);
        prev = end;
    }
    Ok(Chain {
        template: t.id.clone(),
        acts: t.acts.clone(),
        end_times,
    })
}
