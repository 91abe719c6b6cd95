//! Synthetic population, activity chains and located day plans.
//!
//! The pipeline is: fit persons to zone marginals from a seed sample, draw an
//! activity chain per person from its socio-professional group, then bind
//! every activity to a link and pick initial leg modes.

mod chains;
mod io;
mod locations;
mod plan;
mod synth;
pub mod toy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use chains::{allocate_chain, ActTiming, Chain, ChainTemplate, TemplateSet};
pub use io::{
    read_chains, read_controls, read_od, read_plans, read_population, read_seed, read_work_study, write_chains,
    write_controls, write_od, write_plans, write_population, write_seed, write_work_study,
};
pub use locations::{assign_locations, initial_modes, OdMatrix, WorkStudyTable, ZoneMap};
pub use plan::{Activity, Leg, Plan};
pub use synth::{synthesize, validate_synthesis, Attribute, ErrorReport, SeedPerson, ZoneControls};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::activity::ActType;
use crate::network::Network;

#[derive(Debug, thiserror::Error)]
pub enum PopulationError {
    #[error("seed sample has no person in control category {0}")]
    MissingCategory(String),
    #[error("seed sample is empty")]
    EmptySeed,
    #[error("invalid controls for zone {zone}: {message}")]
    InvalidControls { zone: u32, message: String },
    #[error("no activity chain template for group {0}")]
    NoTemplate(Socprof),
    #[error("invalid chain template {id}: {message}")]
    InvalidTemplate { id: String, message: String },
    #[error("zone {0} has no links")]
    EmptyZone(u32),
    #[error("no distribution for {0}")]
    MissingDistribution(String),
    #[error("invalid plan for person {person}: {message}")]
    InvalidPlan { person: u32, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    M,
    F,
}

/// Socio-professional category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Socprof {
    Employed,
    Unemployed,
    Student,
    /// Under 14 years.
    Child,
    Retired,
    Homemaker,
}

impl Socprof {
    pub const ALL: [Socprof; 6] = [
        Socprof::Employed,
        Socprof::Unemployed,
        Socprof::Student,
        Socprof::Child,
        Socprof::Retired,
        Socprof::Homemaker,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Socprof::Employed => "employed",
            Socprof::Unemployed => "unemployed",
            Socprof::Student => "student",
            Socprof::Child => "child",
            Socprof::Retired => "retired",
            Socprof::Homemaker => "homemaker",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Socprof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Socprof {
    type Err = PopulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Socprof::ALL
            .into_iter()
            .find(|g| g.as_str() == s.trim())
            .ok_or_else(|| PopulationError::Parse {
                line: 0,
                message: format!("unknown group '{s}'"),
            })
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::M => "m",
            Gender::F => "f",
        })
    }
}

/// Upper bounds (exclusive) of the age bands 0-13, 14-24, 25-44, 45-64; the last band is open.
pub const AGE_BANDS: [u32; 4] = [14, 25, 45, 65];
pub const NUM_AGE_BANDS: usize = 5;
pub const NUM_INCOME_BANDS: usize = 4;

pub fn age_band(age: u32) -> usize {
    AGE_BANDS.iter().position(|&b| age < b).unwrap_or(AGE_BANDS.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: u32,
    pub age: u32,
    pub gender: Gender,
    /// Household income band, 1 (lowest) to 4.
    pub income: u8,
    pub socprof: Socprof,
    pub car_owner: bool,
    pub home_zone: u32,
}

impl Person {
    /// The under-14 group holds exactly the persons younger than 14.
    pub fn is_consistent(&self) -> bool {
        (self.socprof == Socprof::Child) == (self.age < 14) && (1..=4).contains(&self.income)
    }
}

/// Purposes whose destination comes from the work/study table rather than the OD matrix.
pub fn is_fixed_purpose(act: ActType) -> bool {
    matches!(act, ActType::Work | ActType::Study)
}

/// Inputs of a population build.
#[derive(Clone, Debug)]
pub struct PopulationInputs {
    pub zones: ZoneMap,
    pub seed: Vec<SeedPerson>,
    pub controls: Vec<ZoneControls>,
    pub templates: TemplateSet,
    pub work_study: WorkStudyTable,
    pub od: OdMatrix,
}

#[derive(Clone, Debug)]
pub struct SyntheticPopulation {
    pub persons: Vec<Person>,
    /// Initial plan per person, indexed by person id.
    pub plans: Vec<Plan>,
}

/// Synthesizes persons, then draws and locates one chain per person.
///
/// Each person uses its own random stream, so the result does not depend on
/// thread scheduling.
pub fn build_population(
    net: &Network,
    inputs: &PopulationInputs,
    epsilon: f64,
    walk_limit_m: f64,
    seed: u64,
) -> Result<SyntheticPopulation, PopulationError> {
    let zones = inputs.zones.num_zones();
    inputs.work_study.validate(zones)?;
    inputs.od.validate(zones)?;
    for c in &inputs.controls {
        if c.zone as usize >= zones {
            return Err(PopulationError::InvalidControls {
                zone: c.zone,
                message: format!("only {zones} zones"),
            });
        }
    }
    let persons = synthesize(&inputs.seed, &inputs.controls, epsilon, seed)?;
    let plans = persons
        .par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c4a1);
            rng.set_stream(p.id as u64);
            let chain = allocate_chain(p, &inputs.templates, &mut rng)?;
            let mut plan = assign_locations(p, &chain, &inputs.zones, &inputs.work_study, &inputs.od, &mut rng)?;
            initial_modes(&mut plan, p, net, walk_limit_m);
            plan.validate(p)?;
            Ok(plan)
        })
        .collect::<Result<Vec<_>, PopulationError>>()?;
    Ok(SyntheticPopulation { persons, plans })
}
