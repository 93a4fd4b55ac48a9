//! Run directories: everything needed to reproduce a trained run's
//! predictions, plus the CSV reports the comparison tooling reads.
//!
//! ```text
//! run/
//!   manifest.txt     schema version, model, input width, fold count
//!   config.txt       the experiment config
//!   reports.csv      one row per fold, then mean/min/max/std rows
//!   loss_trace.csv   fold, epoch, train_loss, val_loss
//!   fold_<i>/params.txt, scaler.txt, run.txt
//! ```
//! Every number is written in shortest round-trip form, so reloading is exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use wavecast_core::layers::Parameterized;
use wavecast_core::metrics::{aggregate, EvalReport, Metric, Summary};
use wavecast_core::model::{build_model, Model};
use wavecast_core::train::{FoldOutcome, MinMax, ScalerState, TrainRun};

use crate::config::ExperimentConfig;
use crate::csvutil::{self, fmt_f64, fmt_opt};
use crate::error::{AppError, AppResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const REPORT_HEADER: [&str; 12] = [
    "site",
    "model",
    "fold",
    "mse",
    "rmse",
    "loss",
    "mae",
    "r2",
    "msle",
    "medae",
    "max_error",
    "n",
];

#[derive(Clone, Debug)]
pub struct SavedFold {
    pub fold: usize,
    pub model: Model,
    pub scaler: ScalerState,
    pub run: TrainRun,
    pub report: EvalReport,
}

impl From<&FoldOutcome> for SavedFold {
    fn from(o: &FoldOutcome) -> Self {
        SavedFold {
            fold: o.fold,
            model: o.model.clone(),
            scaler: o.scaler.clone(),
            run: o.run.clone(),
            report: o.report,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub input_dim: usize,
    pub folds: Vec<SavedFold>,
}

impl RunArtifact {
    pub fn summary(&self) -> AppResult<Summary> {
        Ok(aggregate(
            &self.folds.iter().map(|f| f.report).collect::<Vec<_>>(),
        )?)
    }
}

fn write_text(path: &Path, text: &str) -> AppResult<()> {
    let mut f = csvutil::create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| AppError::io(path, e))
}

fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn key_values(path: &Path) -> AppResult<Vec<(String, String)>> {
    Ok(read_text(path)?
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect())
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str, path: &Path) -> AppResult<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| AppError::schema(path, format!("missing `{key}`")))
}

fn parse<T: std::str::FromStr>(text: &str, path: &Path) -> AppResult<T> {
    text.parse()
        .map_err(|_| AppError::schema(path, format!("cannot parse `{text}`")))
}

fn numbers(line: &str, path: &Path) -> AppResult<Vec<f64>> {
    line.split_whitespace().map(|t| parse(t, path)).collect()
}

/// Report rows for every fold followed by the aggregate rows.
pub fn write_reports<W: Write>(
    out: W,
    config: &ExperimentConfig,
    reports: &[EvalReport],
    path: &Path,
) -> AppResult<()> {
    let err = csvutil::csv_err(path);
    let mut w = csvutil::writer(out);
    w.write_record(REPORT_HEADER).map_err(&err)?;
    let site = config.site.map(|s| s.name().to_owned()).unwrap_or_default();
    let model = config.model.name();
    for (i, r) in reports.iter().enumerate() {
        let mut rec = vec![site.clone(), model.to_owned(), i.to_string()];
        rec.extend(Metric::ALL.iter().map(|&m| fmt_opt(r.get(m))));
        rec.push(r.n.to_string());
        w.write_record(&rec).map_err(&err)?;
    }
    let summary = aggregate(reports)?;
    for (label, pick) in [
        (
            "mean",
            (|s: wavecast_core::metrics::Stats| s.mean) as fn(_) -> f64,
        ),
        ("min", |s| s.min),
        ("max", |s| s.max),
        ("std", |s| s.std),
    ] {
        let mut rec = vec![site.clone(), model.to_owned(), label.to_owned()];
        rec.extend(
            Metric::ALL
                .iter()
                .map(|&m| fmt_opt(summary.get(m).map(pick))),
        );
        rec.push(String::new());
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn save_run(dir: &Path, run: &RunArtifact) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    write_text(
        &dir.join("manifest.txt"),
        &format!(
            "schema_version = {SCHEMA_VERSION}\nmodel = {}\ninput_dim = {}\nfolds = {}\n",
            run.config.model,
            run.input_dim,
            run.folds.len()
        ),
    )?;
    write_text(&dir.join("config.txt"), &run.config.to_text())?;

    let reports_path = dir.join("reports.csv");
    let reports: Vec<EvalReport> = run.folds.iter().map(|f| f.report).collect();
    write_reports(
        csvutil::create(&reports_path)?,
        &run.config,
        &reports,
        &reports_path,
    )?;

    let trace_path = dir.join("loss_trace.csv");
    let err = csvutil::csv_err(&trace_path);
    let mut w = csvutil::writer(csvutil::create(&trace_path)?);
    w.write_record(["fold", "epoch", "train_loss", "val_loss"])
        .map_err(&err)?;
    for f in &run.folds {
        for (e, &l) in f.run.loss_trace.iter().enumerate() {
            let val = f.run.val_trace.get(e).copied();
            w.write_record([f.fold.to_string(), e.to_string(), fmt_f64(l), fmt_opt(val)])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| AppError::io(&trace_path, e))?;

    for f in &run.folds {
        let fd = dir.join(format!("fold_{}", f.fold));
        let join = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
        let params: String = f
            .model
            .flat_params()
            .iter()
            .map(|v| fmt_f64(*v) + "\n")
            .collect();
        write_text(&fd.join("params.txt"), &params)?;
        let s = &f.scaler;
        write_text(
            &fd.join("scaler.txt"),
            &format!(
                "{}\n{}\n{}\n{}\n",
                join(&s.features.min),
                join(&s.features.max),
                join(&s.target.min),
                join(&s.target.max)
            ),
        )?;
        write_text(
            &fd.join("run.txt"),
            &format!(
                "best_epoch = {}\nstopped_early = {}\nseed = {}\n",
                f.run.best_epoch, f.run.stopped_early, f.run.seed
            ),
        )?;
    }
    Ok(())
}

fn read_report_rows(path: &Path) -> AppResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csvutil::csv_err(path))?;
    let header = r.headers().map_err(csvutil::csv_err(path))?.clone();
    for col in REPORT_HEADER {
        if !header.iter().any(|h| h == col) {
            return Err(AppError::schema(path, format!("missing column `{col}`")));
        }
    }
    if header.iter().ne(REPORT_HEADER) {
        return Err(AppError::schema(path, "unexpected column order"));
    }
    r.records()
        .map(|rec| rec.map_err(csvutil::csv_err(path)))
        .collect()
}

fn parse_report(rec: &csv::StringRecord, path: &Path) -> AppResult<EvalReport> {
    let f = |i: usize| -> AppResult<f64> { parse(&rec[i], path) };
    Ok(EvalReport {
        mse: f(3)?,
        rmse: f(4)?,
        loss: f(5)?,
        mae: f(6)?,
        r2: if rec[7].is_empty() { None } else { Some(f(7)?) },
        msle: f(8)?,
        medae: f(9)?,
        max_error: f(10)?,
        n: parse(&rec[11], path)?,
    })
}

pub fn check_schema(dir: &Path) -> AppResult<Vec<(String, String)>> {
    let path = dir.join("manifest.txt");
    let kv = key_values(&path)?;
    let version: u32 = parse(lookup(&kv, "schema_version", &path)?, &path)?;
    if version != SCHEMA_VERSION {
        return Err(AppError::schema(
            &path,
            format!("artifact schema version {version}, this build reads version {SCHEMA_VERSION}"),
        ));
    }
    Ok(kv)
}

/// Reloads a run. With `expected_input_dim`, a run trained on a different
/// feature width is rejected.
pub fn load_run(dir: &Path, expected_input_dim: Option<usize>) -> AppResult<RunArtifact> {
    let manifest = dir.join("manifest.txt");
    let kv = check_schema(dir)?;
    let input_dim: usize = parse(lookup(&kv, "input_dim", &manifest)?, &manifest)?;
    let n_folds: usize = parse(lookup(&kv, "folds", &manifest)?, &manifest)?;
    if let Some(want) = expected_input_dim {
        if want != input_dim {
            return Err(AppError::schema(
                &manifest,
                format!("run expects {input_dim} input columns, data has {want}"),
            ));
        }
    }
    let config_path = dir.join("config.txt");
    let config = ExperimentConfig::parse(&read_text(&config_path)?, &config_path, 0)?;

    let reports_path = dir.join("reports.csv");
    let rows = read_report_rows(&reports_path)?;
    let mut reports = Vec::with_capacity(n_folds);
    for rec in rows.iter().take(n_folds) {
        reports.push(parse_report(rec, &reports_path)?);
    }
    if reports.len() != n_folds {
        return Err(AppError::schema(
            &reports_path,
            format!("{} fold rows, manifest lists {n_folds}", reports.len()),
        ));
    }

    let trace_path = dir.join("loss_trace.csv");
    let mut traces = vec![(Vec::new(), Vec::new()); n_folds];
    let mut r = csv::Reader::from_path(&trace_path).map_err(csvutil::csv_err(&trace_path))?;
    for rec in r.records() {
        let rec = rec.map_err(csvutil::csv_err(&trace_path))?;
        let fold: usize = parse(&rec[0], &trace_path)?;
        let slot = traces
            .get_mut(fold)
            .ok_or_else(|| AppError::schema(&trace_path, format!("fold {fold} out of range")))?;
        slot.0.push(parse(&rec[2], &trace_path)?);
        if !rec[3].is_empty() {
            slot.1.push(parse(&rec[3], &trace_path)?);
        }
    }

    let mut folds = Vec::with_capacity(n_folds);
    for (i, ((loss_trace, val_trace), report)) in traces.into_iter().zip(reports).enumerate() {
        let fd = dir.join(format!("fold_{i}"));
        let params_path = fd.join("params.txt");
        let params = numbers(&read_text(&params_path)?, &params_path)?;
        let mut model = build_model(config.model, &config.hp, &config.options, input_dim, 0)?;
        model
            .load_flat(&params)
            .map_err(|e| AppError::schema(&params_path, e.to_string()))?;
        let scaler_path = fd.join("scaler.txt");
        let lines: Vec<Vec<f64>> = read_text(&scaler_path)?
            .lines()
            .map(|l| numbers(l, &scaler_path))
            .collect::<AppResult<_>>()?;
        if lines.len() != 4 || lines[0].len() != input_dim || lines[1].len() != input_dim {
            return Err(AppError::schema(
                &scaler_path,
                "scaler does not match the input width",
            ));
        }
        let scaler = ScalerState {
            features: MinMax {
                min: lines[0].clone(),
                max: lines[1].clone(),
            },
            target: MinMax {
                min: lines[2].clone(),
                max: lines[3].clone(),
            },
        };
        let run_path = fd.join("run.txt");
        let kv = key_values(&run_path)?;
        let run = TrainRun {
            loss_trace,
            val_trace,
            best_epoch: parse(lookup(&kv, "best_epoch", &run_path)?, &run_path)?,
            stopped_early: parse(lookup(&kv, "stopped_early", &run_path)?, &run_path)?,
            seed: parse(lookup(&kv, "seed", &run_path)?, &run_path)?,
        };
        folds.push(SavedFold {
            fold: i,
            model,
            scaler,
            run,
            report,
        });
    }
    Ok(RunArtifact {
        config,
        input_dim,
        folds,
    })
}

/// One `(site, model, fold, metric, value)` record.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRow {
    pub site: String,
    pub model: String,
    pub fold: usize,
    pub metric: &'static str,
    pub value: f64,
}

/// Fold-level metrics of several runs in long format; undefined values are skipped.
pub fn compare_runs(dirs: &[&Path]) -> AppResult<Vec<LongRow>> {
    let mut out = Vec::new();
    for dir in dirs {
        check_schema(dir)?;
        let path = dir.join("reports.csv");
        for rec in read_report_rows(&path)? {
            let Ok(fold) = rec[2].parse::<usize>() else {
                continue;
            };
            for (j, m) in Metric::ALL.iter().enumerate() {
                let cell = &rec[3 + j];
                if cell.is_empty() {
                    continue;
                }
                out.push(LongRow {
                    site: rec[0].to_owned(),
                    model: rec[1].to_owned(),
                    fold,
                    metric: m.name(),
                    value: parse(cell, &path)?,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_long<W: Write>(out: W, rows: &[LongRow], path: &Path) -> AppResult<()> {
    let err = csvutil::csv_err(path);
    let mut w = csvutil::writer(out);
    w.write_record(["site", "model", "fold", "metric", "value"])
        .map_err(&err)?;
    for r in rows {
        w.write_record([
            r.site.clone(),
            r.model.clone(),
            r.fold.to_string(),
            r.metric.to_owned(),
            fmt_f64(r.value),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}
