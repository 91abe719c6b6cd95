use std::ops::Range;

use super::{Person, PopulationError};
use crate::activity::ActType;
use crate::mode::Mode;
use crate::network::LinkIdx;
use crate::Time;

#[derive(Clone, Debug, PartialEq)]
pub struct Activity {
    pub kind: ActType,
    pub link: LinkIdx,
    /// Planned end; `None` only for the final activity.
    pub end_time: Option<Time>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leg {
    pub mode: Mode,
    /// Link sequence for car legs (excluding the origin link, including the
    /// destination link); empty for other modes.
    pub route: Vec<LinkIdx>,
}

impl Leg {
    pub fn new(mode: Mode) -> Self {
        Leg {
            mode,
            route: Vec::new(),
        }
    }
}

/// A day plan: activities alternating with legs, starting and ending at home.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub activities: Vec<Activity>,
    pub legs: Vec<Leg>,
    pub score: Option<f64>,
}

impl Plan {
    pub fn validate(&self, person: &Person) -> Result<(), PopulationError> {
        let fail = |message: String| {
            Err(PopulationError::InvalidPlan {
                person: person.id,
                message,
            })
        };
        let n = self.activities.len();
        if n == 0 || self.legs.len() + 1 != n {
            return fail(format!("{} activities with {} legs", n, self.legs.len()));
        }
        if self.activities[0].kind != ActType::Home || self.activities[n - 1].kind != ActType::Home {
            return fail("plan must start and end at home".into());
        }
        let mut prev = Time::MIN;
        for (k, a) in self.activities.iter().enumerate() {
            match (a.end_time, k + 1 == n) {
                (None, true) => {}
                (Some(t), false) if t > prev => prev = t,
                (Some(_), false) => return fail(format!("activity {k} ends before the previous one")),
                (Some(_), true) => return fail("final activity has an end time".into()),
                (None, false) => return fail(format!("activity {k} has no end time")),
            }
        }
        if !person.car_owner && self.legs.iter().any(|l| l.mode == Mode::Car) {
            return fail("car leg without a car".into());
        }
        Ok(())
    }

    /// Leg index ranges of the home-based tours.
    pub fn tours(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..self.activities.len() {
            if self.activities[k].kind == ActType::Home {
                out.push(start..k);
                start = k;
            }
        }
        if start < self.legs.len() {
            out.push(start..self.legs.len());
        }
        out
    }

    /// Same activities, times and modes, regardless of score and car routes.
    pub fn same_choices(&self, other: &Plan) -> bool {
        self.activities == other.activities
            && self.legs.len() == other.legs.len()
            && self.legs.iter().zip(&other.legs).all(|(a, b)| a.mode == b.mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{Gender, Socprof};

    fn act(kind: ActType, end: Option<Time>) -> Activity {
        Activity {
            kind,
            link: LinkIdx(0),
            end_time: end,
        }
    }

    fn plan(kinds: &[ActType]) -> Plan {
        let n = kinds.len();
        Plan {
            activities: kinds
                .iter()
                .enumerate()
                .map(|(k, &a)| act(a, (k + 1 < n).then_some(3600 * (k as Time + 1))))
                .collect(),
            legs: vec![Leg::new(Mode::Walk); n - 1],
            score: None,
        }
    }

    fn person(car_owner: bool) -> Person {
        Person {
            id: 1,
            age: 30,
            gender: Gender::M,
            income: 2,
            socprof: Socprof::Employed,
            car_owner,
            home_zone: 0,
        }
    }

    #[test]
    fn tours_split_at_home() {
        use ActType::*;
        let p = plan(&[Home, Work, Home, Leisure, Shop, Home]);
        assert_eq!(p.tours(), vec![0..2, 2..5]);
        assert!(p.validate(&person(false)).is_ok());
    }

    #[test]
    fn car_leg_needs_a_car() {
        use ActType::*;
        let mut p = plan(&[Home, Work, Home]);
        p.legs[0].mode = Mode::Car;
        assert!(p.validate(&person(false)).is_err());
        assert!(p.validate(&person(true)).is_ok());
    }

    #[test]
    fn must_close_at_home() {
        use ActType::*;
        assert!(plan(&[Home, Work]).validate(&person(true)).is_err());
    }
}
