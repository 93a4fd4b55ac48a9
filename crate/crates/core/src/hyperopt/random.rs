use super::{Budget, Clock, SearchOutcome, SearchSpace, Stage, Tracker};
use crate::error::{invalid, Result};
use crate::rng::Rng;

/// Independent uniform draws from every domain; keeps the best.
pub fn random_search(
    space: &SearchSpace,
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
    budget: Budget,
    seed: u64,
    clock: &dyn Clock,
) -> Result<SearchOutcome> {
    if budget.max_evaluations == 0 {
        return Err(invalid(
            "budget",
            "random search needs at least one evaluation",
        ));
    }
    let mut rng = Rng::seed_from(seed);
    let mut tracker = Tracker::new(objective, budget, clock);
    let mut i = 0;
    while !tracker.exhausted() {
        let x = space.sample(&mut rng);
        tracker.eval(Stage::Random, i, &x, &[])?;
        i += 1;
    }
    let first = space.sample(&mut Rng::seed_from(seed));
    Ok(tracker.finish((first, f64::NEG_INFINITY)))
}
