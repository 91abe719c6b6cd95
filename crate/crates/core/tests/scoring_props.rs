//! Scoring invariants over random inputs.

use proptest::prelude::*;
use savsim::activity::ActType;
use savsim::mode::Mode;
use savsim::population::{Gender, Person, Socprof};
use savsim::scoring::{LegExperience, PlanExperience, ScoringParams, TasteRule};

fn person() -> impl Strategy<Value = Person> {
    (0u32..90, any::<bool>(), 1u8..=4, any::<bool>()).prop_map(|(age, f, income, car)| Person {
        id: 0,
        age,
        gender: if f { Gender::F } else { Gender::M },
        income,
        socprof: if age < 14 { Socprof::Child } else { Socprof::Employed },
        car_owner: car,
        home_zone: 0,
    })
}

fn sav_leg() -> impl Strategy<Value = LegExperience> {
    (0.0..7200.0f64, 0.0..1800.0f64, 0.0..900.0f64, 0.0..20.0f64).prop_map(|(ivt, wait, det, cost)| LegExperience {
        in_vehicle_s: ivt,
        wait_s: wait,
        detour_excess_s: det,
        cost,
        ..LegExperience::new(Mode::Sav)
    })
}

proptest! {
    #[test]
    fn scaling_sav_sensitivities_never_helps_sav(p in person(), leg in sav_leg(), lambda in 1.0..5.0f64) {
        let base = ScoringParams::default();
        let mut scaled = base.clone();
        scaled.taste.rules.push(TasteRule {
            socprof: None, age_band: None, gender: None, income: None,
            f_time: lambda, f_cost: lambda,
        });
        let before = base.score_leg(&p, &leg).unwrap();
        let after = scaled.score_leg(&p, &leg).unwrap();
        prop_assert!(after <= before + 1e-12);
        // alternatives are untouched
        let pt = LegExperience { in_vehicle_s: leg.in_vehicle_s, cost: 1.5, ..LegExperience::new(Mode::Pt) };
        prop_assert_eq!(base.score_leg(&p, &pt).unwrap(), scaled.score_leg(&p, &pt).unwrap());
    }

    #[test]
    fn plan_score_is_additive(
        p in person(),
        acts in prop::collection::vec((0usize..8, 0.0..50_000.0f64), 1..6),
        legs in prop::collection::vec(sav_leg(), 0..5),
        rejected in 0u32..3,
    ) {
        let params = ScoringParams::default();
        let exp = PlanExperience {
            activities: acts.iter().map(|&(k, d)| (ActType::ALL[k], d)).collect(),
            legs: legs.clone(),
            rejected_requests: rejected,
            stuck: false,
        };
        let mut sum = 0.0;
        for &(k, d) in &exp.activities {
            sum += params.score_activity(k, d).unwrap();
        }
        for l in &legs {
            sum += params.score_leg(&p, l).unwrap();
        }
        sum += params.rejection_penalty * rejected as f64;
        prop_assert_eq!(params.score_plan(&p, &exp).unwrap(), sum);
    }

    #[test]
    fn shifting_time_into_waiting_lowers_the_score(p in person(), leg in sav_leg(), shift in 1.0..600.0f64) {
        prop_assume!(leg.in_vehicle_s >= shift);
        let params = ScoringParams::default();
        let moved = LegExperience { in_vehicle_s: leg.in_vehicle_s - shift, wait_s: leg.wait_s + shift, ..leg.clone() };
        prop_assert!(params.score_leg(&p, &moved).unwrap() < params.score_leg(&p, &leg).unwrap());
    }
}
