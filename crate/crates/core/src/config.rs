//! Scenario configuration. One TOML file fully determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coevolution::ReplanningParams;
use crate::error::{Error, Result};
use crate::mobsim::MobsimParams;
use crate::network::GridSpec;
use crate::population::toy::ToySpec;
use crate::savfleet::{DispatchParams, RebalanceParams};
use crate::scoring::ScoringParams;

/// Road network: a generated grid, or node and link CSV files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<PathBuf>,
}

/// Input tables for population synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisFiles {
    pub seed: PathBuf,
    pub controls: PathBuf,
    pub chains: PathBuf,
    pub od: PathBuf,
    pub work_study: PathBuf,
    pub epsilon: f64,
    pub walk_limit_m: f64,
}

/// Population: the toy generator, synthesis from tables, or ready-made
/// persons and plans. The zone grid applies to the latter two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persons: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plans: Option<PathBuf>,
    #[serde(default = "four")]
    pub zones_x: usize,
    #[serde(default = "four")]
    pub zones_y: usize,
}

fn four() -> usize {
    4
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            toy: Some(ToySpec::default()),
            synthesis: None,
            persons: None,
            plans: None,
            zones_x: 4,
            zones_y: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetConfig {
    /// Vehicles at full scale; the simulated fleet is scaled by the sample rate.
    pub size: u32,
    pub capacity: u32,
    pub ridesharing: bool,
    /// Link ids vehicles start from, used round-robin.
    pub depots: Vec<String>,
    #[serde(default)]
    pub dispatch: DispatchParams,
    #[serde(default)]
    pub rebalance: RebalanceParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    pub iterations: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub network: NetworkConfig,
    #[serde(default)]
    pub population: PopulationConfig,
    pub fleet: FleetConfig,
    #[serde(default)]
    pub mobsim: MobsimParams,
    #[serde(default)]
    pub replanning: ReplanningParams,
    #[serde(default)]
    pub scoring: ScoringParams,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file and resolves relative input paths against its
    /// directory. The output directory stays relative to the working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::file(path, e))?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    /// Prefixes every relative input file reference with `dir`.
    pub fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        let n = &mut self.network;
        n.nodes.iter_mut().chain(n.links.iter_mut()).for_each(fix);
        let p = &mut self.population;
        p.persons.iter_mut().chain(p.plans.iter_mut()).for_each(fix);
        if let Some(s) = &mut p.synthesis {
            for f in [&mut s.seed, &mut s.controls, &mut s.chains, &mut s.od, &mut s.work_study] {
                fix(f);
            }
        }
    }

    /// Checks ranges, source choices and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(cfg_err("iterations", "must be at least 1"));
        }
        let r = self.mobsim.sample_rate;
        if !(r > 0.0 && r <= 1.0) {
            return Err(cfg_err("mobsim.sample_rate", format!("{r} is outside (0, 1]")));
        }
        if self.mobsim.horizon <= 0 {
            return Err(cfg_err("mobsim.horizon", "must be positive"));
        }
        let n = &self.network;
        match (&n.grid, &n.nodes, &n.links) {
            (Some(g), None, None) => {
                if g.size < 2 {
                    return Err(cfg_err("network.grid.size", "needs at least 2 nodes per side"));
                }
            }
            (None, Some(nodes), Some(links)) => {
                exists("network.nodes", nodes)?;
                exists("network.links", links)?;
            }
            _ => return Err(cfg_err("network", "set either grid or both nodes and links")),
        }
        let p = &self.population;
        match (&p.toy, &p.synthesis, &p.persons, &p.plans) {
            (Some(t), None, None, None) => {
                if t.agents == 0 {
                    return Err(cfg_err("population.toy.agents", "must be positive"));
                }
            }
            (None, Some(s), None, None) => {
                exists("population.synthesis.seed", &s.seed)?;
                exists("population.synthesis.controls", &s.controls)?;
                exists("population.synthesis.chains", &s.chains)?;
                exists("population.synthesis.od", &s.od)?;
                exists("population.synthesis.work_study", &s.work_study)?;
            }
            (None, None, Some(persons), Some(plans)) => {
                exists("population.persons", persons)?;
                exists("population.plans", plans)?;
            }
            _ => {
                return Err(cfg_err(
                    "population",
                    "set exactly one of toy, synthesis, or persons with plans",
                ))
            }
        }
        if p.zones_x == 0 || p.zones_y == 0 {
            return Err(cfg_err("population.zones_x/zones_y", "must be positive"));
        }
        let f = &self.fleet;
        if f.capacity == 0 {
            return Err(cfg_err("fleet.capacity", "must be at least 1"));
        }
        if f.size > 0 && f.depots.is_empty() {
            return Err(cfg_err("fleet.depots", "a fleet needs at least one depot link"));
        }
        let d = &f.dispatch;
        if d.max_wait <= 0 || !(d.detour_factor >= 1.0) {
            return Err(cfg_err("fleet.dispatch", "max_wait must be positive and detour_factor at least 1"));
        }
        if !(f.rebalance.cell_size_m > 0.0) || f.rebalance.interval <= 0 {
            return Err(cfg_err("fleet.rebalance", "cell_size_m and interval must be positive"));
        }
        if self.replanning.memory_size == 0 {
            return Err(cfg_err("replanning.memory_size", "must be at least 1"));
        }
        self.replanning
            .weights
            .validate()
            .map_err(|e| cfg_err("replanning.weights", e))?;
        self.scoring.validate().map_err(|e| cfg_err("scoring", e))?;
        Ok(())
    }

    /// Fleet size after downscaling, at least one vehicle when the full-scale fleet is non-empty.
    pub fn scaled_fleet(&self) -> u32 {
        let s = self.fleet.size;
        if s == 0 {
            return 0;
        }
        ((s as f64 * self.mobsim.sample_rate).round() as u32).max(1)
    }

    /// Bundled scenarios: "grid16" (about 10k agents) and "grid8" (1500 agents).
    pub fn preset(name: &str) -> Option<Self> {
        let (size, toy, depots, fleet, iterations) = match name {
            "grid16" => (
                16,
                ToySpec::default(),
                vec!["n4_4-n5_4", "n4_11-n5_11", "n11_4-n12_4", "n11_11-n12_11"],
                200,
                100,
            ),
            "grid8" => (8, ToySpec::small(), vec!["n2_2-n3_2", "n5_5-n6_5"], 30, 40),
            _ => return None,
        };
        Some(ScenarioConfig {
            name: name.into(),
            seed: 3000,
            iterations,
            output_dir: PathBuf::from("output").join(name),
            network: NetworkConfig {
                grid: Some(GridSpec {
                    size,
                    ..GridSpec::default()
                }),
                ..NetworkConfig::default()
            },
            population: PopulationConfig {
                toy: Some(toy),
                ..PopulationConfig::default()
            },
            fleet: FleetConfig {
                size: fleet,
                capacity: 4,
                ridesharing: true,
                depots: depots.into_iter().map(String::from).collect(),
                dispatch: DispatchParams::default(),
                rebalance: RebalanceParams::default(),
            },
            mobsim: MobsimParams::default(),
            replanning: ReplanningParams::default(),
            scoring: ScoringParams::default(),
        })
    }
}

fn exists(field: &str, p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(cfg_err(field, format!("file not found: {}", p.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in ["grid16", "grid8"] {
            let cfg = ScenarioConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
        assert!(ScenarioConfig::preset("paris").is_none());
    }

    #[test]
    fn fleet_scales_with_sample_rate() {
        let mut cfg = ScenarioConfig::preset("grid8").unwrap();
        cfg.mobsim.sample_rate = 0.1;
        assert_eq!(cfg.scaled_fleet(), 3);
        cfg.mobsim.sample_rate = 0.01;
        assert_eq!(cfg.scaled_fleet(), 1);
    }
}
