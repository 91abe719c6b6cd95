use rand::Rng;

use crate::population::Plan;

/// Up to `capacity` plans of one agent; exactly one is selected.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanMemory {
    plans: Vec<Plan>,
    selected: usize,
    capacity: usize,
}

impl PlanMemory {
    pub fn new(plan: Plan, capacity: usize) -> Self {
        assert!(capacity >= 1, "memory holds at least one plan");
        PlanMemory {
            plans: vec![plan],
            selected: 0,
            capacity,
        }
    }

    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn selected_index(&self) -> usize {
        self.selected
    }

    pub fn selected(&self) -> &Plan {
        &self.plans[self.selected]
    }

    pub fn selected_mut(&mut self) -> &mut Plan {
        &mut self.plans[self.selected]
    }

    pub fn select(&mut self, idx: usize) {
        assert!(idx < self.plans.len());
        self.selected = idx;
    }

    /// Adds and selects a plan. A plan with the same choices as a memorized
    /// one selects that plan instead and hands it the new routes; a full
    /// memory first drops its worst-scored plan (unscored plans count as best).
    pub fn add(&mut self, plan: Plan) -> usize {
        if let Some(k) = self.plans.iter().position(|p| p.same_choices(&plan)) {
            self.plans[k].legs = plan.legs;
            self.selected = k;
            return k;
        }
        if self.plans.len() >= self.capacity {
            let worst = self
                .plans
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let s = |p: &Plan| p.score.unwrap_or(f64::INFINITY);
                    s(a.1).total_cmp(&s(b.1)).then(a.0.cmp(&b.0))
                })
                .map(|(k, _)| k)
                .expect("memory is non-empty");
            self.plans.remove(worst);
        }
        self.plans.push(plan);
        self.selected = self.plans.len() - 1;
        self.selected
    }
}

/// Multinomial logit draw over scores with scale `beta`; an infinite scale
/// picks the first best plan. Unscored plans count as the best score.
pub fn select_plan(memory: &PlanMemory, beta: f64, rng: &mut impl Rng) -> usize {
    let scores: Vec<f64> = memory.plans.iter().map(|p| p.score.unwrap_or(f64::INFINITY)).collect();
    logit_draw(&scores, beta, rng)
}

pub(crate) fn logit_draw(scores: &[f64], beta: f64, rng: &mut impl Rng) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first_best = scores.iter().position(|&s| s == best).unwrap_or(0);
    if scores.len() == 1 || beta.is_infinite() || best.is_infinite() {
        return first_best;
    }
    let weights: Vec<f64> = scores.iter().map(|&s| (beta * (s - best)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    first_best
}
