//! Charypar-Nagel plan scoring with SAV taste variation and fares.
//!
//! Activities earn `beta_dur * t_typ * ln(dur / t0)` with `t0 = t_typ / e`,
//! floored at zero. Legs cost a mode constant plus linear time and money
//! terms. For SAV legs the marginal time and money utilities are scaled by
//! the person's taste factors, and waiting weighs `wait_factor` times
//! in-vehicle time.
//!
//! All defaults are toy values, not calibrated against survey data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activity::ActType;
use crate::mode::Mode;
use crate::population::{age_band, Gender, Person, Socprof};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScoringError {
    #[error("no scoring parameters for activity type {0}")]
    UnknownActivity(ActType),
    #[error("no scoring parameters for mode {0}")]
    UnknownMode(Mode),
    #[error("person {0} has a car leg but no car")]
    CarWithoutOwner(u32),
    #[error("negative {0}")]
    Negative(&'static str),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityParams {
    /// Typical duration, hours.
    pub typical_h: f64,
    /// Marginal utility of performing, utils per hour.
    pub beta_dur: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub asc: f64,
    /// Marginal utility of travel time, utils per hour, not positive.
    pub beta_tt: f64,
    /// Marginal utility of money, utils per euro, positive; applied to costs.
    pub beta_money: f64,
}

/// Multiplies SAV time and cost sensitivities for persons matching every
/// given field. All matching rules apply, multiplicatively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasteRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub socprof: Option<Socprof>,
    /// Age band index 0..=4 (0-13, 14-24, 25-44, 45-64, 65+).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_band: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub income: Option<u8>,
    #[serde(default = "one")]
    pub f_time: f64,
    #[serde(default = "one")]
    pub f_cost: f64,
}

fn one() -> f64 {
    1.0
}

impl TasteRule {
    fn matches(&self, p: &Person) -> bool {
        self.socprof.is_none_or(|s| s == p.socprof)
            && self.age_band.is_none_or(|b| b == age_band(p.age))
            && self.gender.is_none_or(|g| g == p.gender)
            && self.income.is_none_or(|i| i == p.income)
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasteFactors {
    #[serde(default)]
    pub rules: Vec<TasteRule>,
}

impl TasteFactors {
    /// `(f_time, f_cost)` for a person; 1.0 where no rule applies.
    pub fn factors(&self, p: &Person) -> (f64, f64) {
        self.rules
            .iter()
            .filter(|r| r.matches(p))
            .fold((1.0, 1.0), |(t, c), r| (t * r.f_time, c * r.f_cost))
    }

    /// Toy factors: men, younger and wealthier persons lean towards SAVs.
    pub fn toy() -> Self {
        let rule = |f_time, f_cost| TasteRule {
            socprof: None,
            age_band: None,
            gender: None,
            income: None,
            f_time,
            f_cost,
        };
        TasteFactors {
            rules: vec![
                TasteRule {
                    gender: Some(Gender::M),
                    ..rule(0.9, 1.0)
                },
                TasteRule {
                    gender: Some(Gender::F),
                    ..rule(1.1, 1.0)
                },
                TasteRule {
                    age_band: Some(1),
                    ..rule(0.9, 1.0)
                },
                TasteRule {
                    age_band: Some(2),
                    ..rule(0.9, 1.0)
                },
                TasteRule {
                    age_band: Some(4),
                    ..rule(1.25, 1.1)
                },
                TasteRule {
                    income: Some(1),
                    ..rule(1.0, 1.2)
                },
                TasteRule {
                    income: Some(4),
                    ..rule(1.0, 0.8)
                },
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FareVariant {
    SavIndividual,
    SavShared,
    Car,
    Pt,
    Walk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FareScheme {
    pub sav_individual_per_km: f64,
    /// Billed on the direct distance.
    pub sav_shared_per_km: f64,
    pub car_per_km: f64,
    pub pt_flat: f64,
}

impl Default for FareScheme {
    fn default() -> Self {
        FareScheme {
            sav_individual_per_km: 0.5,
            sav_shared_per_km: 0.4,
            car_per_km: 0.3,
            pt_flat: 1.5,
        }
    }
}

impl FareScheme {
    /// Price of a leg. SAV rides are billed on the direct distance.
    pub fn fare(&self, variant: FareVariant, km: f64) -> f64 {
        match variant {
            FareVariant::SavIndividual => self.sav_individual_per_km * km,
            FareVariant::SavShared => self.sav_shared_per_km * km,
            FareVariant::Car => self.car_per_km * km,
            FareVariant::Pt if km > 0.0 => self.pt_flat,
            FareVariant::Pt | FareVariant::Walk => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let all = [self.sav_individual_per_km, self.sav_shared_per_km, self.car_per_km, self.pt_flat];
        if all.iter().any(|&x| !(x >= 0.0)) {
            return Err(ScoringError::Negative("fare"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    pub activities: BTreeMap<ActType, ActivityParams>,
    pub modes: BTreeMap<Mode, ModeParams>,
    /// Weight of SAV waiting relative to in-vehicle time.
    pub wait_factor: f64,
    /// Added to car legs of car owners.
    pub car_ownership_bonus: f64,
    /// Added to car legs ending in a zone without parking.
    pub no_parking_penalty: f64,
    pub no_parking_zones: Vec<u32>,
    /// Added once per rejected SAV request.
    pub rejection_penalty: f64,
    /// Utils per hour of SAV ride beyond the detour cap; subtracted.
    pub detour_penalty_per_h: f64,
    /// Score of a plan that could not be completed within the horizon.
    pub stuck_score: f64,
    pub taste: TasteFactors,
    pub fares: FareScheme,
}

impl Default for ScoringParams {
    fn default() -> Self {
        use ActType::*;
        let act = |typical_h| ActivityParams {
            typical_h,
            beta_dur: 6.0,
        };
        let activities = BTreeMap::from([
            (Home, act(12.0)),
            (Work, act(8.0)),
            (Study, act(6.0)),
            (Shop, act(1.0)),
            (Leisure, act(2.0)),
            (Errand, act(1.0)),
            (Escort, act(0.25)),
            (Eat, act(1.0)),
        ]);
        let mode = |asc, beta_tt| ModeParams {
            asc,
            beta_tt,
            beta_money: 1.0,
        };
        let modes = BTreeMap::from([
            (Mode::Car, mode(0.0, -3.0)),
            (Mode::Pt, mode(-0.6, -2.0)),
            (Mode::Walk, mode(0.0, -6.0)),
            (Mode::Sav, mode(-0.2, -3.0)),
        ]);
        ScoringParams {
            activities,
            modes,
            wait_factor: 1.5,
            car_ownership_bonus: 0.0,
            no_parking_penalty: -1.0,
            no_parking_zones: Vec::new(),
            rejection_penalty: -10.0,
            detour_penalty_per_h: 6.0,
            stuck_score: -1000.0,
            taste: TasteFactors::toy(),
            fares: FareScheme::default(),
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        for a in ActType::ALL {
            let p = self.activities.get(&a).ok_or(ScoringError::UnknownActivity(a))?;
            if !(p.typical_h > 0.0) {
                return Err(ScoringError::Invalid(format!("typical duration of {a} must be positive")));
            }
        }
        for m in Mode::ALL {
            let p = self.modes.get(&m).ok_or(ScoringError::UnknownMode(m))?;
            if p.beta_tt > 0.0 {
                return Err(ScoringError::Invalid(format!("beta_tt of {m} must not be positive")));
            }
            if !(p.beta_money > 0.0) {
                return Err(ScoringError::Invalid(format!("beta_money of {m} must be positive")));
            }
        }
        if !(self.wait_factor >= 1.0) {
            return Err(ScoringError::Invalid("wait_factor must be at least 1".into()));
        }
        if self.taste.rules.iter().any(|r| !(r.f_time >= 0.0 && r.f_cost >= 0.0)) {
            return Err(ScoringError::Negative("taste factor"));
        }
        self.fares.validate()
    }

    /// Activity utility for a performed duration in seconds.
    pub fn score_activity(&self, kind: ActType, duration_s: f64) -> Result<f64, ScoringError> {
        if duration_s < 0.0 {
            return Err(ScoringError::Negative("activity duration"));
        }
        let p = self.activities.get(&kind).ok_or(ScoringError::UnknownActivity(kind))?;
        let t0_h = p.typical_h * (-1.0f64).exp();
        let dur_h = duration_s / 3600.0;
        if dur_h <= t0_h {
            return Ok(0.0);
        }
        Ok(p.beta_dur * p.typical_h * (dur_h / t0_h).ln())
    }

    /// Leg utility. Non-SAV modes fold any waiting into `in_vehicle_s`.
    pub fn score_leg(&self, person: &Person, leg: &LegExperience) -> Result<f64, ScoringError> {
        if leg.in_vehicle_s < 0.0 || leg.wait_s < 0.0 || leg.detour_excess_s < 0.0 || leg.cost < 0.0 {
            return Err(ScoringError::Negative("leg time or cost"));
        }
        let p = self.modes.get(&leg.mode).ok_or(ScoringError::UnknownMode(leg.mode))?;
        let (f_time, f_cost) = if leg.mode == Mode::Sav {
            self.taste.factors(person)
        } else {
            (1.0, 1.0)
        };
        let beta_tt = p.beta_tt * f_time;
        let beta_money = p.beta_money * f_cost;
        let mut u = p.asc + beta_tt * leg.in_vehicle_s / 3600.0 - beta_money * leg.cost;
        if leg.mode == Mode::Sav {
            u += self.wait_factor * beta_tt * leg.wait_s / 3600.0;
            u -= self.detour_penalty_per_h * leg.detour_excess_s / 3600.0;
        }
        if leg.mode == Mode::Car {
            if !person.car_owner {
                return Err(ScoringError::CarWithoutOwner(person.id));
            }
            u += self.car_ownership_bonus;
            if leg.dest_zone.is_some_and(|z| self.no_parking_zones.contains(&z)) {
                u += self.no_parking_penalty;
            }
        }
        Ok(u)
    }

    /// Sum of activity and leg scores plus penalties; `stuck_score` if the
    /// plan did not finish.
    pub fn score_plan(&self, person: &Person, exp: &PlanExperience) -> Result<f64, ScoringError> {
        if exp.stuck {
            return Ok(self.stuck_score);
        }
        let mut total = 0.0;
        for &(kind, dur) in &exp.activities {
            total += self.score_activity(kind, dur)?;
        }
        for leg in &exp.legs {
            total += self.score_leg(person, leg)?;
        }
        Ok(total + self.rejection_penalty * exp.rejected_requests as f64)
    }
}

/// What a traveler experienced on one leg.
#[derive(Clone, Debug, PartialEq)]
pub struct LegExperience {
    pub mode: Mode,
    pub in_vehicle_s: f64,
    pub wait_s: f64,
    /// Ride time beyond the detour cap, SAV only.
    pub detour_excess_s: f64,
    pub cost: f64,
    pub dest_zone: Option<u32>,
}

impl LegExperience {
    pub fn new(mode: Mode) -> Self {
        LegExperience {
            mode,
            in_vehicle_s: 0.0,
            wait_s: 0.0,
            detour_excess_s: 0.0,
            cost: 0.0,
            dest_zone: None,
        }
    }
}

/// Executed plan: performed activity durations (first and last home merged
/// into one overnight stay) and leg experiences.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlanExperience {
    pub activities: Vec<(ActType, f64)>,
    pub legs: Vec<LegExperience>,
    pub rejected_requests: u32,
    pub stuck: bool,
}

/// Length of the wrapped overnight activity: the morning part until
/// `first_end` plus the evening part from `last_start` until midnight.
pub fn overnight_duration(first_end: f64, last_start: f64) -> f64 {
    first_end.max(0.0) + (86_400.0 - last_start).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person(gender: Gender, age: u32, car_owner: bool) -> Person {
        Person {
            id: 7,
            age,
            gender,
            income: 2,
            socprof: Socprof::Employed,
            car_owner,
            home_zone: 0,
        }
    }

    fn flat() -> ScoringParams {
        ScoringParams {
            taste: TasteFactors::default(),
            ..ScoringParams::default()
        }
    }

    #[test]
    fn activity_log_form() {
        let p = flat();
        let t0 = 8.0 * 3600.0 * (-1.0f64).exp();
        assert!(p.score_activity(ActType::Work, t0).unwrap().abs() < 1e-12);
        assert!((p.score_activity(ActType::Work, 8.0 * 3600.0).unwrap() - 48.0).abs() < 1e-9);
        assert_eq!(p.score_activity(ActType::Work, 60.0).unwrap(), 0.0);
        assert!(p.score_activity(ActType::Work, -1.0).is_err());
        let mut missing = flat();
        missing.activities.remove(&ActType::Eat);
        assert_eq!(missing.score_activity(ActType::Eat, 10.0), Err(ScoringError::UnknownActivity(ActType::Eat)));
    }

    #[test]
    fn zero_leg_is_the_constant() {
        let p = flat();
        let me = person(Gender::M, 30, true);
        for m in Mode::ALL {
            let u = p.score_leg(&me, &LegExperience::new(m)).unwrap();
            assert_eq!(u, p.modes[&m].asc);
        }
    }

    #[test]
    fn sav_leg_hand_sum() {
        let mut p = flat();
        p.modes.insert(
            Mode::Sav,
            ModeParams {
                asc: 0.0,
                beta_tt: -6.0,
                beta_money: 0.5,
            },
        );
        let leg = LegExperience {
            in_vehicle_s: 1800.0,
            wait_s: 720.0,
            cost: 4.0,
            ..LegExperience::new(Mode::Sav)
        };
        let u = p.score_leg(&person(Gender::F, 30, false), &leg).unwrap();
        assert!((u - (-3.0 - 1.8 - 2.0)).abs() < 1e-12, "{u}");
    }

    #[test]
    fn doubling_time_factor_can_flip_the_choice() {
        let mut p = flat();
        let me = person(Gender::M, 30, false);
        let sav = LegExperience {
            in_vehicle_s: 900.0,
            wait_s: 300.0,
            cost: 1.0,
            ..LegExperience::new(Mode::Sav)
        };
        let pt = LegExperience {
            in_vehicle_s: 1500.0,
            cost: 1.5,
            ..LegExperience::new(Mode::Pt)
        };
        assert!(p.score_leg(&me, &sav).unwrap() > p.score_leg(&me, &pt).unwrap());
        p.taste.rules.push(TasteRule {
            socprof: None,
            age_band: None,
            gender: Some(Gender::M),
            income: None,
            f_time: 2.0,
            f_cost: 1.0,
        });
        assert!(p.score_leg(&me, &sav).unwrap() < p.score_leg(&me, &pt).unwrap());
    }

    #[test]
    fn car_rules() {
        let mut p = flat();
        p.no_parking_zones = vec![3];
        let leg = LegExperience {
            dest_zone: Some(3),
            ..LegExperience::new(Mode::Car)
        };
        assert_eq!(p.score_leg(&person(Gender::M, 30, true), &leg).unwrap(), -1.0);
        assert_eq!(
            p.score_leg(&person(Gender::M, 30, false), &leg),
            Err(ScoringError::CarWithoutOwner(7))
        );
    }

    #[test]
    fn fares() {
        let f = FareScheme::default();
        assert!((f.fare(FareVariant::SavIndividual, 10.0) - 5.0).abs() < 1e-12);
        assert!((f.fare(FareVariant::SavShared, 10.0) - 4.0).abs() < 1e-12);
        for v in [FareVariant::SavIndividual, FareVariant::SavShared, FareVariant::Car, FareVariant::Pt] {
            assert_eq!(f.fare(v, 0.0), 0.0);
        }
    }

    #[test]
    fn plan_is_the_sum_of_its_parts() {
        let p = flat();
        let me = person(Gender::F, 40, false);
        let walk = LegExperience {
            in_vehicle_s: 600.0,
            ..LegExperience::new(Mode::Walk)
        };
        let exp = PlanExperience {
            activities: vec![(ActType::Home, 15.0 * 3600.0), (ActType::Shop, 3600.0)],
            legs: vec![walk.clone(), walk.clone()],
            rejected_requests: 0,
            stuck: false,
        };
        let home = 6.0 * 12.0 * (15.0f64 / (12.0 * (-1.0f64).exp())).ln();
        let shop = 6.0 * 1.0 * 1.0;
        let legs = 2.0 * (-6.0 * 600.0 / 3600.0);
        let total = p.score_plan(&me, &exp).unwrap();
        assert!((total - (home + shop + legs)).abs() < 1e-9);
        let rejected = PlanExperience {
            rejected_requests: 1,
            ..exp.clone()
        };
        assert!((p.score_plan(&me, &rejected).unwrap() - (total - 10.0)).abs() < 1e-9);
        let single = PlanExperience {
            activities: vec![(ActType::Home, 86_400.0)],
            ..PlanExperience::default()
        };
        assert_eq!(
            p.score_plan(&me, &single).unwrap(),
            p.score_activity(ActType::Home, 86_400.0).unwrap()
        );
    }

    #[test]
    fn waiting_weighs_more_than_riding() {
        let p = flat();
        let me = person(Gender::M, 30, false);
        let ride = LegExperience {
            in_vehicle_s: 1200.0,
            wait_s: 300.0,
            ..LegExperience::new(Mode::Sav)
        };
        let wait = LegExperience {
            in_vehicle_s: 900.0,
            wait_s: 600.0,
            ..LegExperience::new(Mode::Sav)
        };
        assert!(p.score_leg(&me, &wait).unwrap() < p.score_leg(&me, &ride).unwrap());
    }

    #[test]
    fn defaults_validate_and_round_trip_toml() {
        let p = ScoringParams::default();
        p.validate().unwrap();
        let text = toml::to_string(&p).unwrap();
        let back: ScoringParams = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn overnight_wraps_midnight() {
        assert_eq!(overnight_duration(7.0 * 3600.0, 18.0 * 3600.0), 13.0 * 3600.0);
        assert_eq!(overnight_duration(7.0 * 3600.0, 90_000.0), 7.0 * 3600.0);
    }
}
