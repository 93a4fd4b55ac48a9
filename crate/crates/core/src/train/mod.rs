//! Training loop, data partitioning and cross-validation.

mod adam;
mod data;
mod scaler;

use alloc::vec::Vec;

pub use adam::Adam;
pub use data::{
    kfold, kfold_indices, split_70_30, split_indices, Dataset, Fold, HeldOutSet, TrainSet,
};
pub use scaler::{MinMax, ScalerState};

use crate::error::{invalid, Error, Result};
use crate::layers::{Mode, Parameterized};
use crate::metrics::{aggregate, evaluate, EvalReport, Summary};
use crate::model::{build_model, flatten_grads, ArchOptions, Architecture, HyperParams, Model};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: Option<usize>,
    /// Share of the training rows held back to drive early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            patience: Some(10),
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRun {
    /// Mean regularised batch loss per epoch.
    pub loss_trace: Vec<f64>,
    /// Validation loss per epoch, when a validation set was given.
    pub val_trace: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub seed: u64,
}

/// Mixes `tag` into `seed` so that folds and stages draw independent streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    Rng::seed_from(seed).fork(tag).next_u64()
}

/// Half mean squared error of `model` on `data`.
pub fn data_loss(model: &Model, data: &Dataset) -> Result<f64> {
    let pred = model.predict_rows(data.features())?;
    let ss: f64 = pred
        .iter()
        .zip(data.targets())
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(ss / (2.0 * data.len() as f64))
}

fn l2_penalty(params: &[f64], decay: &[bool], l2: f64) -> f64 {
    l2 * params
        .iter()
        .zip(decay)
        .filter(|(_, &d)| d)
        .map(|(w, _)| w * w)
        .sum::<f64>()
}

/// Per-element mask: true for weights, false for biases.
fn decay_elements(model: &Model) -> Vec<bool> {
    model
        .params()
        .iter()
        .zip(model.decay_mask())
        .flat_map(|(t, d)| core::iter::repeat_n(d, t.len()))
        .collect()
}

pub fn train(
    model: &mut Model,
    train: &Dataset,
    validation: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    train_with(model, train, validation, cfg, &mut |_, _, _| {})
}

/// Mini-batch Adam on the half-MSE loss plus `l2 * sum(w^2)` over weights.
///
/// `observer` is called after every epoch with `(epoch, train_loss, val_loss)`.
/// With a validation set and a patience the best-scoring parameters are
/// restored at the end.
pub fn train_with(
    model: &mut Model,
    train: &Dataset,
    validation: Option<&Dataset>,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(usize, f64, Option<f64>),
) -> Result<TrainRun> {
    let hp = model.hp;
    if train.width() != model.input_dim() {
        return Err(Error::LengthMismatch {
            left: train.width(),
            right: model.input_dim(),
        });
    }
    if hp.batch_size > train.len() {
        return Err(invalid(
            "batch_size",
            alloc::format!(
                "{} exceeds the {} training rows",
                hp.batch_size,
                train.len()
            ),
        ));
    }
    if !(hp.learning_rate >= 0.0) {
        return Err(invalid("learning_rate", "must be non-negative"));
    }
    let decay = decay_elements(model);
    let mut params = model.flat_params();
    let mut adam = Adam::new(hp.learning_rate, params.len());
    let mut rng = Rng::seed_from(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut run = TrainRun {
        loss_trace: Vec::with_capacity(cfg.epochs),
        val_trace: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
        seed: cfg.seed,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (b, batch) in order.chunks(hp.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let mut grads = model.zero_grads();
            let mut ss = 0.0;
            for &i in batch {
                let (y_hat, trace) = model.forward(train.row(i), Mode::Train, &mut rng)?;
                let r = y_hat - train.targets()[i];
                ss += r * r;
                model.backward(&trace, r * scale, &mut grads)?;
            }
            let loss = 0.5 * ss * scale + l2_penalty(&params, &decay, hp.l2_reg);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            let mut g = flatten_grads(&grads);
            for ((gi, &w), &d) in g.iter_mut().zip(&params).zip(&decay) {
                if d {
                    *gi += 2.0 * hp.l2_reg * w;
                }
            }
            adam.step(&mut params, &g);
            model.load_flat(&params)?;
            epoch_loss += loss;
            batches += 1;
        }
        let train_loss = epoch_loss / batches as f64;
        run.loss_trace.push(train_loss);

        let val_loss = match validation {
            Some(v) => Some(data_loss(model, v)?),
            None => None,
        };
        observer(epoch, train_loss, val_loss);
        let Some(vl) = val_loss else {
            run.best_epoch = epoch;
            continue;
        };
        run.val_trace.push(vl);
        if best.as_ref().is_none_or(|(b, _)| vl < *b) {
            best = Some((vl, params.clone()));
            run.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience.is_some_and(|p| since_best >= p) {
                run.stopped_early = true;
                break;
            }
        }
    }
    if let (Some(_), Some((_, p))) = (cfg.patience, best) {
        model.load_flat(&p)?;
    }
    Ok(run)
}

/// Everything produced by training and scoring one partition.
#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub fold: usize,
    /// Scored on the held-out rows in the scaled target space.
    pub report: EvalReport,
    pub run: TrainRun,
    pub model: Model,
    pub scaler: ScalerState,
    /// Held-out predictions, scaled target space.
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Fits the scaler on `train`, trains a fresh model, and scores `held_out`.
pub fn fit_and_score(
    arch: Architecture,
    hp: &HyperParams,
    options: &ArchOptions,
    train_set: &TrainSet,
    held_out: &HeldOutSet,
    cfg: &TrainConfig,
    fold: usize,
) -> Result<FoldOutcome> {
    let scaler = ScalerState::fit(train_set)?;
    let scaled_train = scaler.transform(&train_set.0)?;
    let scaled_test = scaler.transform(&held_out.0)?;
    let fold_seed = derive_seed(cfg.seed, fold as u64);

    let (fit_rows, val_rows) = match cfg.patience {
        Some(_) if cfg.validation_fraction > 0.0 && scaled_train.len() >= 20 => {
            let (a, b) = split_indices(
                scaled_train.len(),
                1.0 - cfg.validation_fraction,
                derive_seed(fold_seed, 1),
            )?;
            (scaled_train.subset(&a), Some(scaled_train.subset(&b)))
        }
        _ => (scaled_train, None),
    };
    let mut model = build_model(
        arch,
        hp,
        options,
        fit_rows.width(),
        derive_seed(fold_seed, 2),
    )?;
    let run_cfg = TrainConfig {
        seed: derive_seed(fold_seed, 3),
        ..*cfg
    };
    let run = train(&mut model, &fit_rows, val_rows.as_ref(), &run_cfg)?;
    let predictions = model.predict_rows(scaled_test.features())?;
    let report = evaluate(scaled_test.targets(), &predictions)?;
    Ok(FoldOutcome {
        fold,
        report,
        run,
        model,
        scaler,
        predictions,
        targets: scaled_test.targets().to_vec(),
    })
}

/// A single 70/30 run.
pub fn holdout(
    arch: Architecture,
    hp: &HyperParams,
    options: &ArchOptions,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<FoldOutcome> {
    let (tr, te) = split_70_30(data, derive_seed(cfg.seed, u64::MAX))?;
    fit_and_score(arch, hp, options, &tr, &te, cfg, 0)
}

/// Sequential k-fold cross-validation.
pub fn cross_validate(
    arch: Architecture,
    hp: &HyperParams,
    options: &ArchOptions,
    data: &Dataset,
    k: usize,
    cfg: &TrainConfig,
) -> Result<(Vec<FoldOutcome>, Summary)> {
    let folds = kfold(data, k, derive_seed(cfg.seed, u64::MAX))?;
    let outcomes = folds
        .iter()
        .map(|f| fit_and_score(arch, hp, options, &f.train, &f.held_out, cfg, f.index))
        .collect::<Result<Vec<_>>>()?;
    let summary = aggregate(&outcomes.iter().map(|o| o.report).collect::<Vec<_>>())?;
    Ok((outcomes, summary))
}
