//! Black-box hyperparameter search: grid stage plus adaptive (1+1)-EA
//! ("evolutionary grid search"), Nelder–Mead, and a random-search baseline.
//!
//! Objectives are maximised and receive a point in the search space's value
//! coordinates (one entry per [`Param`]). Nelder–Mead minimises, as usual.

mod egs;
mod nelder_mead;
mod random;
mod space;
mod synthetic;

use alloc::vec::Vec;

pub use egs::{
    adaptive_one_plus_one_ea, egs_optimize, grid_stage, DecayOrientation, EaConfig, EaState,
    GridOutcome, PairingPlan, StepClock,
};
pub use nelder_mead::{
    nelder_mead, nelder_mead_search, simplex_offsets, vertex_spread, NmConfig, NmOutcome,
};
pub use random::random_search;
pub use space::{Domain, Param, SearchSpace};
pub use synthetic::SeparableQuadratic;

use crate::error::Result;

/// Source of elapsed time for wall-clock budgets.
pub trait Clock {
    fn elapsed_secs(&self) -> f64;
}

/// A clock that never advances; wall-clock limits then never trigger.
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub max_evaluations: usize,
    pub wall_clock_secs: Option<f64>,
}

impl Budget {
    pub fn evaluations(n: usize) -> Self {
        Budget {
            max_evaluations: n,
            wall_clock_secs: None,
        }
    }
}

/// Which phase produced a trace row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Grid,
    /// EA pass over the pairing-plan group with this index.
    Ea(usize),
    Random,
    NelderMead,
}

impl Stage {
    pub fn label(&self) -> alloc::string::String {
        match self {
            Stage::Initial => "initial".into(),
            Stage::Grid => "grid".into(),
            Stage::Ea(g) => alloc::format!("ea{g}"),
            Stage::Random => "random".into(),
            Stage::NelderMead => "nelder-mead".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub stage: Stage,
    /// Iteration within the stage.
    pub iteration: usize,
    /// Global evaluation counter, from 0.
    pub eval_id: usize,
    pub params: Vec<f64>,
    pub score: f64,
    pub best_so_far: f64,
    /// Step sizes in force (EA only; empty otherwise).
    pub sigma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub best: Vec<f64>,
    pub best_score: f64,
    pub trace: Vec<TraceRow>,
    /// Stopped because the evaluation or wall-clock budget ran out.
    pub truncated: bool,
}

/// Counts evaluations, enforces the budget, and keeps the elitist best.
pub(crate) struct Tracker<'o, 'c> {
    objective: &'o mut dyn FnMut(&[f64]) -> Result<f64>,
    budget: Budget,
    clock: &'c dyn Clock,
    trace: Vec<TraceRow>,
    best: Option<(Vec<f64>, f64)>,
    pub truncated: bool,
}

impl<'o, 'c> Tracker<'o, 'c> {
    pub fn new(
        objective: &'o mut dyn FnMut(&[f64]) -> Result<f64>,
        budget: Budget,
        clock: &'c dyn Clock,
    ) -> Self {
        Tracker {
            objective,
            budget,
            clock,
            trace: Vec::new(),
            best: None,
            truncated: false,
        }
    }

    pub fn used(&self) -> usize {
        self.trace.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget.max_evaluations.saturating_sub(self.used())
    }

    /// True (and marks truncation) once no further evaluation is allowed.
    pub fn exhausted(&mut self) -> bool {
        let out_of_time = self
            .budget
            .wall_clock_secs
            .is_some_and(|l| self.clock.elapsed_secs() >= l);
        if self.remaining() == 0 || out_of_time {
            self.truncated = true;
        }
        self.truncated
    }

    /// Scores `x`; non-finite scores rank below everything.
    pub fn eval(
        &mut self,
        stage: Stage,
        iteration: usize,
        x: &[f64],
        sigma: &[f64],
    ) -> Result<f64> {
        let raw = (self.objective)(x)?;
        let score = if raw.is_nan() { f64::NEG_INFINITY } else { raw };
        if self.best.as_ref().is_none_or(|(_, b)| score > *b) {
            self.best = Some((x.to_vec(), score));
        }
        let best_so_far = self.best.as_ref().map(|b| b.1).expect("set above");
        self.trace.push(TraceRow {
            stage,
            iteration,
            eval_id: self.trace.len(),
            params: x.to_vec(),
            score,
            best_so_far,
            sigma: sigma.to_vec(),
        });
        Ok(score)
    }

    pub fn best(&self) -> Option<&(Vec<f64>, f64)> {
        self.best.as_ref()
    }

    /// `fallback` is reported when it beats every evaluation (or none ran).
    pub fn finish(self, fallback: (Vec<f64>, f64)) -> SearchOutcome {
        let (best, best_score) = match self.best {
            Some(b) if b.1 >= fallback.1 => b,
            _ => fallback,
        };
        SearchOutcome {
            best,
            best_score,
            trace: self.trace,
            truncated: self.truncated,
        }
    }
}

/// True when the best-so-far column never decreases.
pub fn trace_is_monotone(trace: &[TraceRow]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1].best_so_far >= w[0].best_so_far)
}
