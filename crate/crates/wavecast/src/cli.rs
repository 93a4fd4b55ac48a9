//! `wavecast` command line.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use wavecast_core::hyperopt::{SearchSpace, StepClock};
use wavecast_core::metrics::Metric;
use wavecast_core::physics::{
    evaluate_cell, generate_row, landscape_cells, FarmLayout, FarmState, InteractionKernel,
    Landscape, Quadrature, SphereParams, SynthConfig,
};

use crate::artifact::{compare_runs, load_run, save_run, write_long, write_reports};
use crate::config::ExperimentConfig;
use crate::csvutil;
use crate::dataset::{self, load_csv, Site};
use crate::error::{AppError, AppResult};
use crate::experiment::{self, Objective, Optimizer, TuneOptions};
use crate::farmio;

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(io::stdout(), $($arg)*);
    }};
}

pub const SEED_ENV: &str = "WAVECAST_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "wavecast",
    version,
    about = "Wave-farm power forecasting: data checks, training, tuning and layout scans"
)]
pub struct Cli {
    /// Worker threads for folds and landscape cells (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a 49-column site file and list every invariant violation.
    Validate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        site: Option<Site>,
    },
    /// Train and score a model as described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run directory (defaults to the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a saved run's fold models on another data file.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search hyperparameters.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        optimizer: OptimizerArg,
        #[arg(long)]
        budget: usize,
        #[arg(long, value_enum, default_value = "model")]
        objective: ObjectiveArg,
        /// Let Nelder-Mead treat grid parameters as continuous.
        #[arg(long)]
        relax: bool,
        #[arg(long)]
        max_seconds: Option<f64>,
        /// What the EA step-size schedule counts.
        #[arg(long, value_enum, default_value = "iterations")]
        step_clock: StepClockArg,
        /// Output directory for trace.csv and best.cfg.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan positions for one more converter next to a fixed layout.
    Landscape {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        climate: PathBuf,
        /// Grid spacing in metres.
        #[arg(long)]
        step: f64,
        /// Frequencies in the power quadrature.
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Drop the synthetic interaction kernel.
        #[arg(long)]
        no_interaction: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-format metrics of several runs for plotting.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic site file from the frequency-domain power model.
    Generate {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 16)]
        n_wec: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OptimizerArg {
    Egs,
    Nm,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ObjectiveArg {
    Model,
    Synthetic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StepClockArg {
    Iterations,
    Successes,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn default_seed() -> AppResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| AppError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Writes through `f` to `path`, or to stdout.
fn emit(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write, &Path) -> AppResult<()>,
) -> AppResult<()> {
    match path {
        Some(p) => {
            let mut w = csvutil::create(p)?;
            f(&mut w, p)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock, Path::new("<stdout>"))
        }
    }
}

fn dispatch(command: Command) -> AppResult<i32> {
    match command {
        Command::Validate { data, site } => validate(&data, site),
        Command::Train { config, out } => train(&config, out),
        Command::Evaluate { run, data, out } => {
            let (wec, report) = load_csv(&data, None)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let ds = wec.to_dataset()?;
            let saved = load_run(&run, Some(ds.width()))?;
            let reports = experiment::evaluate_run(&saved, &ds)?;
            emit(out.as_deref(), |w, p| {
                write_reports(w, &saved.config, &reports, p)
            })?;
            Ok(0)
        }
        Command::Tune {
            config,
            optimizer,
            budget,
            objective,
            relax,
            max_seconds,
            step_clock,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config, default_seed()?)?;
            let opts = TuneOptions {
                optimizer: match optimizer {
                    OptimizerArg::Egs => Optimizer::Egs,
                    OptimizerArg::Nm => Optimizer::NelderMead,
                    OptimizerArg::Random => Optimizer::Random,
                },
                objective: match objective {
                    ObjectiveArg::Model => Objective::Model,
                    ObjectiveArg::Synthetic => Objective::Synthetic,
                },
                budget,
                wall_clock_secs: max_seconds,
                relax,
                step_clock: match step_clock {
                    StepClockArg::Iterations => StepClock::Iterations,
                    StepClockArg::Successes => StepClock::Successes,
                },
            };
            tune(&cfg, &opts, out)
        }
        Command::Landscape {
            layout,
            climate,
            step,
            points,
            no_interaction,
            out,
        } => {
            let fixed = farmio::read_layout(&layout)?;
            let climate = farmio::read_climate(&climate)?;
            let quad = Quadrature {
                points,
                refine: None,
                ..Quadrature::default()
            };
            let kernel = (!no_interaction).then(InteractionKernel::default);
            let land = scan(&fixed, kernel, &climate, &quad, step)?;
            emit(out.as_deref(), |w, p| farmio::write_landscape(w, &land, p))?;
            if let Some(best) = land.argmax() {
                eprintln!(
                    "best cell: ({}, {}) with {:.6e} W; {} of {} cells masked",
                    best.x,
                    best.y,
                    best.power.unwrap_or(0.0),
                    land.masked(),
                    land.cells.len()
                );
            }
            Ok(0)
        }
        Command::Compare { runs, out } => {
            let dirs: Vec<&Path> = runs.iter().map(PathBuf::as_path).collect();
            let rows = compare_runs(&dirs)?;
            emit(out.as_deref(), |w, p| write_long(w, &rows, p))?;
            Ok(0)
        }
        Command::Generate {
            rows,
            out,
            seed,
            n_wec,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => default_seed()?,
            };
            let cfg = SynthConfig {
                n_wec,
                ..SynthConfig::default()
            };
            let table: Vec<Vec<f64>> = (0..rows)
                .into_par_iter()
                .map(|i| generate_row(&cfg, seed, i as u64))
                .collect::<Result<_, _>>()?;
            dataset::write_csv(&out, &table)?;
            eprintln!("wrote {rows} rows to {}", out.display());
            Ok(0)
        }
    }
}

fn validate(data: &Path, site: Option<Site>) -> AppResult<i32> {
    let (_, report) = load_csv(data, site)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    outln!(
        "{}: {} rows{}, {} violation(s)",
        report.path,
        report.rows,
        if report.had_header {
            " (header skipped)"
        } else {
            ""
        },
        report.violations.len()
    );
    outln!("row,col,problem");
    for v in &report.violations {
        outln!("{},{},\"{}\"", v.row, v.col, v);
    }
    Ok(if report.is_clean() { 0 } else { 2 })
}

fn train(config: &Path, out: Option<PathBuf>) -> AppResult<i32> {
    let cfg = ExperimentConfig::load(config, default_seed()?)?;
    let (data, report) = experiment::prepare_data(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.is_clean() {
        eprintln!(
            "warning: left out {} row(s) with violations",
            report.violating_rows().len()
        );
    }
    let ds = data.to_dataset()?;
    let run = experiment::run_training(&cfg, &ds)?;
    let dir = out.unwrap_or_else(|| cfg.output.clone());
    save_run(&dir, &run)?;
    let summary = run.summary()?;
    outln!(
        "{} on {} rows, {} fold(s) -> {}",
        cfg.model,
        ds.len(),
        run.folds.len(),
        dir.display()
    );
    outln!("metric,mean,min,max,std");
    for m in Metric::ALL {
        if let Some(s) = summary.get(m) {
            outln!("{},{},{},{},{}", m.name(), s.mean, s.min, s.max, s.std);
        }
    }
    Ok(0)
}

fn tune(cfg: &ExperimentConfig, opts: &TuneOptions, out: Option<PathBuf>) -> AppResult<i32> {
    let data = match (opts.objective, &cfg.data) {
        (Objective::Model, Some(_)) => Some(experiment::prepare_data(cfg)?.0.to_dataset()?),
        _ => None,
    };
    let outcome = experiment::tune(cfg, opts, data.as_ref())?;
    let dir = out.unwrap_or_else(|| cfg.output.join("tune"));
    let space = SearchSpace::hyperparams();
    let trace_path = dir.join("trace.csv");
    experiment::write_trace(csvutil::create(&trace_path)?, &space, &outcome, &trace_path)?;
    let mut best = cfg.clone();
    best.hp = wavecast_core::model::HyperParams::from_vector(&outcome.best)?;
    let best_path = dir.join("best.cfg");
    let mut f = csvutil::create(&best_path)?;
    f.write_all(best.to_text().as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| AppError::io(&best_path, e))?;
    outln!(
        "best score {} after {} evaluation(s){}",
        outcome.best_score,
        outcome.trace.len(),
        if outcome.truncated && outcome.trace.len() < opts.budget {
            " (stopped by the time limit)"
        } else {
            ""
        }
    );
    for (p, v) in space.params.iter().zip(&outcome.best) {
        outln!("{} = {}", p.name, v);
    }
    outln!(
        "trace: {}\nconfig: {}",
        trace_path.display(),
        best_path.display()
    );
    Ok(0)
}

/// Parallel landscape scan; each cell builds its own farm.
pub fn scan(
    fixed: &FarmLayout,
    kernel: Option<InteractionKernel>,
    climate: &[wavecast_core::physics::SeaState],
    quad: &Quadrature,
    step: f64,
) -> AppResult<Landscape> {
    let positions = landscape_cells(fixed, step)?;
    if !positions.iter().any(|p| p.2) {
        return Err(wavecast_core::Error::NoFeasibleCell.into());
    }
    let builder = |l: &FarmLayout| FarmState::spheres(SphereParams::default(), l, kernel);
    let powers = positions
        .par_iter()
        .map(|&(x, y, ok)| {
            if ok {
                evaluate_cell(fixed, &builder, climate, quad, x, y).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Landscape::from_powers(step, &positions, powers)?)
}
