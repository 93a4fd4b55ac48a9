//! Training, evaluation and tuning driven by an [`ExperimentConfig`].

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use wavecast_core::hyperopt::{
    egs_optimize, nelder_mead_search, random_search, Budget, Clock, Domain, EaConfig, NmConfig,
    PairingPlan, SearchOutcome, SearchSpace, SeparableQuadratic, StepClock,
};
use wavecast_core::metrics::{evaluate, EvalReport};
use wavecast_core::model::HyperParams;
use wavecast_core::train::{
    derive_seed, fit_and_score, holdout, kfold, Dataset, FoldOutcome, TrainConfig,
};
use wavecast_core::Error as CoreError;

use crate::artifact::{RunArtifact, SavedFold};
use crate::config::{CvMode, ExperimentConfig, OnViolation};
use crate::csvutil::{self, fmt_f64};
use crate::dataset::{load_csv, ValidationReport, WecDataset};
use crate::error::{AppError, AppResult};

/// Elapsed real time since construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs,
        patience: cfg.patience,
        validation_fraction: cfg.validation_fraction,
        seed: cfg.seed,
    }
}

/// Loads the configured data file, applies the violation policy and the
/// optional subsample. The report always describes the full file.
pub fn prepare_data(cfg: &ExperimentConfig) -> AppResult<(WecDataset, ValidationReport)> {
    let path = cfg
        .data
        .as_deref()
        .ok_or_else(|| AppError::Usage("the config has no `data` file".into()))?;
    let (mut data, report) = load_csv(path, cfg.site)?;
    if !report.is_clean() {
        match cfg.on_violation {
            OnViolation::Error => {
                return Err(AppError::Invalid {
                    report: Box::new(report),
                })
            }
            OnViolation::Drop => data = data.without_rows(&report.violating_rows()),
        }
    }
    if let Some(n) = cfg.subsample {
        data = data.subsample(n, derive_seed(cfg.seed, 0x5u64));
    }
    Ok((data, report))
}

/// Trains and scores every partition; folds run on the current rayon pool
/// and come back in fold order.
pub fn train_folds(cfg: &ExperimentConfig, data: &Dataset) -> AppResult<Vec<FoldOutcome>> {
    let tc = train_config(cfg);
    match cfg.cv {
        CvMode::Holdout => Ok(vec![holdout(cfg.model, &cfg.hp, &cfg.options, data, &tc)?]),
        CvMode::KFold(k) => {
            let folds = kfold(data, k, derive_seed(cfg.seed, u64::MAX))?;
            folds
                .par_iter()
                .map(|f| {
                    fit_and_score(
                        cfg.model,
                        &cfg.hp,
                        &cfg.options,
                        &f.train,
                        &f.held_out,
                        &tc,
                        f.index,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(AppError::from)
        }
    }
}

pub fn run_training(cfg: &ExperimentConfig, data: &Dataset) -> AppResult<RunArtifact> {
    let outcomes = train_folds(cfg, data)?;
    Ok(RunArtifact {
        config: cfg.clone(),
        input_dim: data.width(),
        folds: outcomes.iter().map(SavedFold::from).collect(),
    })
}

/// Scores every fold model of a run on `data`, each in its own scaled target space.
pub fn evaluate_run(run: &RunArtifact, data: &Dataset) -> AppResult<Vec<EvalReport>> {
    run.folds
        .iter()
        .map(|f| {
            let scaled = f.scaler.transform(data)?;
            let pred = f.model.predict_rows(scaled.features())?;
            Ok(evaluate(scaled.targets(), &pred)?)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    Egs,
    NelderMead,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Mean R² of the configured model over a 3-fold CV of the data.
    Model,
    /// Separable quadratic over the same space, with a known optimum.
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuneOptions {
    pub optimizer: Optimizer,
    pub objective: Objective,
    pub budget: usize,
    pub wall_clock_secs: Option<f64>,
    /// Allow Nelder–Mead to treat grid parameters as continuous and snap.
    pub relax: bool,
    pub step_clock: StepClock,
}

const SEARCH_FOLDS: usize = 3;

/// Runs the chosen search starting from the config's hyperparameters.
pub fn tune(
    cfg: &ExperimentConfig,
    opts: &TuneOptions,
    data: Option<&Dataset>,
) -> AppResult<SearchOutcome> {
    let space = SearchSpace::hyperparams();
    if opts.optimizer == Optimizer::NelderMead && !opts.relax {
        if let Some(p) = space
            .params
            .iter()
            .find(|p| matches!(p.domain, Domain::Grid(_)))
        {
            return Err(AppError::Usage(format!(
                "Nelder-Mead needs a continuous space but `{}` is discrete; pass --relax to optimise a continuous relaxation",
                p.name
            )));
        }
    }
    let x0 = space.project(&cfg.hp.to_vector());
    let synthetic = SeparableQuadratic::reference(&space);
    let tc = train_config(cfg);
    // Candidates are scored on a reduced 3-fold CV; the full protocol is for the final run.
    let search_folds = match data {
        Some(d) => kfold(d, SEARCH_FOLDS, derive_seed(cfg.seed, u64::MAX - 1))?,
        None => Vec::new(),
    };
    let mut model_objective = |x: &[f64]| -> wavecast_core::Result<f64> {
        let hp = HyperParams::from_vector(x)?;
        let scored: wavecast_core::Result<Vec<FoldOutcome>> = search_folds
            .par_iter()
            .map(|f| {
                fit_and_score(
                    cfg.model,
                    &hp,
                    &cfg.options,
                    &f.train,
                    &f.held_out,
                    &tc,
                    f.index,
                )
            })
            .collect();
        match scored {
            Ok(folds) => {
                let r2: Vec<f64> = folds
                    .iter()
                    .map(|o| o.report.r2.unwrap_or(f64::NAN))
                    .collect();
                Ok(r2.iter().sum::<f64>() / r2.len() as f64)
            }
            // An untrainable candidate loses rather than ending the search.
            Err(CoreError::NonFiniteLoss { .. } | CoreError::InvalidParameter { .. }) => {
                Ok(f64::NAN)
            }
            Err(e) => Err(e),
        }
    };
    let mut synthetic_objective =
        |x: &[f64]| -> wavecast_core::Result<f64> { Ok(synthetic.score(x)) };
    let objective: &mut dyn FnMut(&[f64]) -> wavecast_core::Result<f64> = match opts.objective {
        Objective::Model => {
            if data.is_none() {
                return Err(AppError::Usage(
                    "the model objective needs a `data` file".into(),
                ));
            }
            &mut model_objective
        }
        Objective::Synthetic => &mut synthetic_objective,
    };
    let budget = Budget {
        max_evaluations: opts.budget,
        wall_clock_secs: opts.wall_clock_secs,
    };
    let clock = WallClock::start();
    let outcome = match opts.optimizer {
        Optimizer::Egs => {
            let plan = PairingPlan::default_for(&space)?;
            let ea = EaConfig {
                step_clock: opts.step_clock,
                ..EaConfig::default()
            };
            egs_optimize(&space, &x0, objective, budget, &plan, &ea, cfg.seed, &clock)?
        }
        Optimizer::NelderMead => {
            nelder_mead_search(&space, &x0, objective, budget, &NmConfig::default(), &clock)?
        }
        Optimizer::Random => random_search(&space, objective, budget, cfg.seed, &clock)?,
    };
    Ok(outcome)
}

/// `stage, iteration, eval_id`, the parameters, `score, best_so_far`, then
/// `sigma_<name>` step sizes (empty outside the EA stages).
pub fn write_trace<W: Write>(
    out: W,
    space: &SearchSpace,
    outcome: &SearchOutcome,
    path: &Path,
) -> AppResult<()> {
    let err = csvutil::csv_err(path);
    let mut w = csvutil::writer(out);
    let mut header: Vec<String> = ["stage", "iteration", "eval_id"].map(String::from).to_vec();
    header.extend(space.params.iter().map(|p| p.name.clone()));
    header.extend(["score".to_owned(), "best_so_far".to_owned()]);
    header.extend(space.params.iter().map(|p| format!("sigma_{}", p.name)));
    w.write_record(&header).map_err(&err)?;
    for r in &outcome.trace {
        let mut rec = vec![
            r.stage.label(),
            r.iteration.to_string(),
            r.eval_id.to_string(),
        ];
        rec.extend(r.params.iter().map(|v| fmt_f64(*v)));
        rec.extend([fmt_f64(r.score), fmt_f64(r.best_so_far)]);
        // Step sizes exist only for EA evaluations.
        rec.extend(
            (0..space.dim()).map(|i| r.sigma.get(i).map(|v| fmt_f64(*v)).unwrap_or_default()),
        );
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}
