use alloc::vec::Vec;
use alloc::{format, vec};

use super::{Budget, Clock, NoClock, SearchOutcome, SearchSpace, Stage, Tracker};
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng::Rng;

/// Sign convention for the step-size schedule `sigma = sigma0 * exp(-lambda * t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayOrientation {
    /// `lambda` starts at `+lambda0` and grows by `r_d` per success: steps contract.
    Shrinking,
    /// `lambda` starts at `-lambda0` and drops by `r_d` per success: steps expand.
    AsPrinted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EaConfig {
    pub lambda0: f64,
    pub r_d: f64,
    pub orientation: DecayOrientation,
    /// Initial step sizes on each parameter's internal axis; domain defaults when `None`.
    pub sigma0: Option<Vec<f64>>,
    pub step_clock: StepClock,
}

/// What `t` counts in the step-size schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepClock {
    Iterations,
    Successes,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            lambda0: 0.04,
            r_d: 0.01,
            orientation: DecayOrientation::Shrinking,
            sigma0: None,
            step_clock: StepClock::Iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EaState {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma0: Vec<f64>,
    pub lambda: f64,
    pub r_d: f64,
    pub orientation: DecayOrientation,
    pub t: usize,
    pub successes: usize,
    pub step_clock: StepClock,
    pub best_score: f64,
}

impl EaState {
    /// Starts at `mu` whose score is already known.
    pub fn new(space: &SearchSpace, mu: &[f64], mu_score: f64, cfg: &EaConfig) -> Result<Self> {
        space.check_point(mu)?;
        let sigma0 = match &cfg.sigma0 {
            Some(s) => {
                space.check_point(s)?;
                s.clone()
            }
            None => space
                .params
                .iter()
                .map(|p| p.domain.default_sigma0())
                .collect(),
        };
        if sigma0.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("sigma0", "step sizes must be positive"));
        }
        if !(cfg.r_d >= 0.0) {
            return Err(invalid("r_d", "must be non-negative"));
        }
        let lambda = match cfg.orientation {
            DecayOrientation::Shrinking => cfg.lambda0.abs(),
            DecayOrientation::AsPrinted => -cfg.lambda0.abs(),
        };
        Ok(EaState {
            mu: space.project(mu),
            sigma: sigma0.clone(),
            sigma0,
            lambda,
            r_d: cfg.r_d,
            orientation: cfg.orientation,
            t: 0,
            successes: 0,
            step_clock: cfg.step_clock,
            best_score: mu_score,
        })
    }

    fn on_success(&mut self) {
        match self.orientation {
            DecayOrientation::Shrinking => self.lambda += self.r_d,
            DecayOrientation::AsPrinted => self.lambda -= self.r_d,
        }
        self.successes += 1;
        let t = match self.step_clock {
            StepClock::Iterations => self.t,
            StepClock::Successes => self.successes,
        };
        let factor = math::exp(-self.lambda * t as f64);
        for (s, s0) in self.sigma.iter_mut().zip(&self.sigma0) {
            // Keep sigma strictly positive and finite under either orientation.
            *s = (s0 * factor).clamp(f64::MIN_POSITIVE, f64::MAX);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOutcome {
    /// Winning values of the two grid axes.
    pub values: [f64; 2],
    pub best: Vec<f64>,
    pub score: f64,
    pub outcome: SearchOutcome,
}

fn grid_values(space: &SearchSpace, axis: usize) -> Result<&[f64]> {
    match space.params.get(axis).map(|p| &p.domain) {
        Some(super::Domain::Grid(g)) if g.is_empty() => Err(Error::EmptyGrid("grid stage")),
        Some(super::Domain::Grid(g)) => Ok(g),
        Some(_) => Err(invalid(
            "grid stage",
            format!("parameter {axis} is not a grid"),
        )),
        None => Err(Error::BadAxis {
            axis,
            rank: space.dim(),
        }),
    }
}

fn run_grid(
    space: &SearchSpace,
    base: &[f64],
    axes: [usize; 2],
    tracker: &mut Tracker,
) -> Result<([f64; 2], Vec<f64>, f64)> {
    let (ga, gb) = (grid_values(space, axes[0])?, grid_values(space, axes[1])?);
    let mut best: Option<([f64; 2], Vec<f64>, f64)> = None;
    let mut it = 0;
    for &a in ga {
        for &b in gb {
            if tracker.exhausted() {
                return best
                    .ok_or_else(|| invalid("budget", "no grid evaluation fitted in the budget"));
            }
            let mut x = base.to_vec();
            x[axes[0]] = a;
            x[axes[1]] = b;
            let r = tracker.eval(Stage::Grid, it, &x, &[])?;
            it += 1;
            if best.as_ref().is_none_or(|(_, _, s)| r > *s) {
                best = Some(([a, b], x, r));
            }
        }
    }
    Ok(best.expect("grids are non-empty"))
}

/// Evaluates every combination of the two grid axes (first axis outer) with
/// all other parameters taken from `base`, and returns the first argmax.
pub fn grid_stage(
    space: &SearchSpace,
    base: &[f64],
    axes: [usize; 2],
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
) -> Result<GridOutcome> {
    space.check_point(base)?;
    grid_values(space, axes[0])?;
    grid_values(space, axes[1])?;
    let base = space.project(base);
    let mut tracker = Tracker::new(objective, Budget::evaluations(usize::MAX), &NoClock);
    let (values, best, score) = run_grid(space, &base, axes, &mut tracker)?;
    Ok(GridOutcome {
        values,
        best: best.clone(),
        score,
        outcome: tracker.finish((best, score)),
    })
}

fn run_ea(
    state: &mut EaState,
    space: &SearchSpace,
    active: &[usize],
    tracker: &mut Tracker,
    max_evals: usize,
    stage: Stage,
    rng: &mut Rng,
) -> Result<()> {
    if active.is_empty() {
        return Err(invalid("group", "no parameters to mutate"));
    }
    if let Some(&bad) = active.iter().find(|&&i| i >= space.dim()) {
        return Err(Error::BadAxis {
            axis: bad,
            rank: space.dim(),
        });
    }
    let rate = 2.0 / active.len() as f64;
    let mut iteration = 0;
    while iteration < max_evals && !tracker.exhausted() {
        state.t += 1;
        let mut solution = state.mu.clone();
        let mut mutate = |i: usize, rng: &mut Rng| {
            let d = &space.params[i].domain;
            let z = d.to_internal(state.mu[i]) + state.sigma[i] * rng.normal();
            solution[i] = d.from_internal(z);
        };
        let mut mutated = false;
        for &i in active {
            if rng.uniform() <= rate {
                mutate(i, rng);
                mutated = true;
            }
        }
        if !mutated {
            let i = active[rng.below(active.len())];
            mutate(i, rng);
        }
        let r = tracker.eval(stage, iteration, &solution, &state.sigma)?;
        iteration += 1;
        if r > state.best_score {
            state.mu = solution;
            state.best_score = r;
            state.on_success();
        }
    }
    Ok(())
}

/// Adaptive (1+1)-EA over the parameters listed in `active`, others frozen.
///
/// Each iteration mutates every active parameter with probability `2 / N`
/// (at least one is always mutated) by a normal step on its internal axis,
/// then projects onto the domain. An offspring replaces `mu` only if it
/// scores strictly better; on success the step sizes are rescheduled.
pub fn adaptive_one_plus_one_ea(
    mut state: EaState,
    space: &SearchSpace,
    active: &[usize],
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
    budget: Budget,
    rng: &mut Rng,
    clock: &dyn Clock,
) -> Result<(EaState, SearchOutcome)> {
    let mut tracker = Tracker::new(objective, budget, clock);
    run_ea(
        &mut state,
        space,
        active,
        &mut tracker,
        usize::MAX,
        Stage::Ea(0),
        rng,
    )?;
    let outcome = tracker.finish((state.mu.clone(), state.best_score));
    Ok((state, outcome))
}

/// Order in which parameters are tuned.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingPlan {
    /// Two parameters searched exhaustively first; `None` skips the grid stage.
    pub grid: Option<[usize; 2]>,
    /// EA passes, in order; each mutates only its own group.
    pub groups: Vec<Vec<usize>>,
}

impl PairingPlan {
    /// Learning rate and batch size by grid, then filters and units, then
    /// dropouts, attention width and L2 strength.
    pub fn default_for(space: &SearchSpace) -> Result<PairingPlan> {
        let idx = |name: &str| {
            space
                .index_of(name)
                .ok_or_else(|| invalid("pairing plan", format!("space has no `{name}` parameter")))
        };
        let group = |names: &[&str]| names.iter().map(|n| idx(n)).collect::<Result<Vec<_>>>();
        Ok(PairingPlan {
            grid: Some([idx("learning_rate")?, idx("batch_size")?]),
            groups: vec![
                group(&["cnf1", "cnf2", "cnf3", "cnf4", "nhu1", "nhu2"])?,
                group(&["pdo1", "pdo2", "attention_dim", "l2_reg"])?,
            ],
        })
    }

    /// Evaluations needed before the EA passes start.
    pub fn minimum_budget(&self, space: &SearchSpace) -> Result<usize> {
        let grid = match self.grid {
            Some([a, b]) => grid_values(space, a)?.len() * grid_values(space, b)?.len(),
            None => 0,
        };
        Ok(1 + grid)
    }
}

/// Evolutionary grid search: evaluate `x0`, run the grid stage, then one EA
/// pass per plan group. Each pass starts from the best point found so far;
/// the remaining budget is shared between passes in proportion to group size.
#[allow(clippy::too_many_arguments)]
pub fn egs_optimize(
    space: &SearchSpace,
    x0: &[f64],
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
    budget: Budget,
    plan: &PairingPlan,
    cfg: &EaConfig,
    seed: u64,
    clock: &dyn Clock,
) -> Result<SearchOutcome> {
    space.check_point(x0)?;
    let needed = plan.minimum_budget(space)?;
    if budget.max_evaluations < needed {
        return Err(invalid(
            "budget",
            format!(
                "{} evaluations is below the minimum of {needed} for the grid stage",
                budget.max_evaluations
            ),
        ));
    }
    let x0 = space.project(x0);
    let mut tracker = Tracker::new(objective, budget, clock);
    tracker.eval(Stage::Initial, 0, &x0, &[])?;
    if let Some(axes) = plan.grid {
        run_grid(space, &x0, axes, &mut tracker)?;
    }

    let total: usize = plan.groups.iter().map(Vec::len).sum();
    let mut root = Rng::seed_from(seed);
    for (g, group) in plan.groups.iter().enumerate() {
        let remaining = tracker.remaining();
        let share = if g + 1 == plan.groups.len() {
            remaining
        } else {
            remaining * group.len() / total.max(1)
        };
        let (mu, score) = tracker.best().cloned().expect("initial point evaluated");
        let mut state = EaState::new(space, &mu, score, cfg)?;
        let mut rng = root.fork(g as u64);
        run_ea(
            &mut state,
            space,
            group,
            &mut tracker,
            share,
            Stage::Ea(g),
            &mut rng,
        )?;
    }
    let fallback = (x0, f64::NEG_INFINITY);
    Ok(tracker.finish(fallback))
}
