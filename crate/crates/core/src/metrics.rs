//! Regression metrics and their fold-level aggregation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// The eight reported metrics, in report column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Mse,
    Rmse,
    Loss,
    Mae,
    R2,
    Msle,
    MedAe,
    MaxError,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Mse,
        Metric::Rmse,
        Metric::Loss,
        Metric::Mae,
        Metric::R2,
        Metric::Msle,
        Metric::MedAe,
        Metric::MaxError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
            Metric::Loss => "loss",
            Metric::Mae => "mae",
            Metric::R2 => "r2",
            Metric::Msle => "msle",
            Metric::MedAe => "medae",
            Metric::MaxError => "max_error",
        }
    }

    pub fn from_name(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub mse: f64,
    pub rmse: f64,
    /// Half the MSE.
    pub loss: f64,
    pub mae: f64,
    /// `None` when the targets have zero variance and R² is undefined.
    pub r2: Option<f64>,
    pub msle: f64,
    /// Median absolute residual.
    pub medae: f64,
    /// Largest absolute residual.
    pub max_error: f64,
    pub n: usize,
}

impl EvalReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Mse => Some(self.mse),
            Metric::Rmse => Some(self.rmse),
            Metric::Loss => Some(self.loss),
            Metric::Mae => Some(self.mae),
            Metric::R2 => self.r2,
            Metric::Msle => Some(self.msle),
            Metric::MedAe => Some(self.medae),
            Metric::MaxError => Some(self.max_error),
        }
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Scores predictions `y_hat` against targets `y`.
pub fn evaluate(y: &[f64], y_hat: &[f64]) -> Result<EvalReport> {
    if y.len() != y_hat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: y_hat.len(),
        });
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, needed: 2 });
    }
    if let Some(&v) = y.iter().chain(y_hat).find(|&&v| v <= -1.0) {
        return Err(Error::Domain {
            op: "msle",
            value: v,
        });
    }
    let nf = n as f64;
    let mut ss_res = 0.0;
    let mut abs_sum = 0.0;
    let mut log_sq = 0.0;
    let mut abs_res = Vec::with_capacity(n);
    for (&a, &p) in y.iter().zip(y_hat) {
        let r = a - p;
        ss_res += r * r;
        abs_sum += r.abs();
        abs_res.push(r.abs());
        let l = math::ln_1p(a) - math::ln_1p(p);
        log_sq += l * l;
    }
    let mean_y = y.iter().sum::<f64>() / nf;
    let ss_tot: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    abs_res.sort_by(f64::total_cmp);
    let mse = ss_res / nf;
    Ok(EvalReport {
        mse,
        rmse: math::sqrt(mse),
        loss: mse / 2.0,
        mae: abs_sum / nf,
        r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
        msle: log_sq / nf,
        medae: median(&abs_res),
        max_error: *abs_res.last().expect("n >= 2"),
        n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation (divides by the count).
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Rounding can push the mean of near-identical values a hair outside [min, max].
        Some(Stats {
            mean: mean.clamp(min, max),
            min,
            max,
            std: math::sqrt(var),
        })
    }
}

/// Per-metric statistics across folds; `None` where no fold had a defined value.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub folds: usize,
    stats: [Option<Stats>; 8],
}

impl Summary {
    pub fn get(&self, m: Metric) -> Option<Stats> {
        self.stats[Metric::ALL
            .iter()
            .position(|&x| x == m)
            .expect("known metric")]
    }
}

pub fn aggregate(reports: &[EvalReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::TooFewSamples { got: 0, needed: 1 });
    }
    let stats = Metric::ALL.map(|m| {
        let vals: Vec<f64> = reports.iter().filter_map(|r| r.get(m)).collect();
        Stats::of(&vals)
    });
    Ok(Summary {
        folds: reports.len(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn perfect_fit() {
        let y = [0.1, 0.5, 0.9, 0.3];
        let r = evaluate(&y, &y).unwrap();
        assert_eq!(
            (r.mse, r.rmse, r.mae, r.msle, r.medae, r.max_error),
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(r.r2, Some(1.0));
    }

    #[test]
    fn hand_example() {
        let r = evaluate(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((r.mse - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.rmse - 0.816_496_580_927_726).abs() < 1e-12);
        assert!((r.loss - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.mae - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.r2, Some(0.0));
        assert_eq!(r.medae, 1.0);
        assert_eq!(r.max_error, 1.0);
    }

    #[test]
    fn mean_prediction_scores_zero_r2() {
        let y = [3.0, 1.0, 4.0, 1.0, 5.0];
        let m = y.iter().sum::<f64>() / 5.0;
        let r = evaluate(&y, &[m; 5]).unwrap();
        assert!(r.r2.unwrap().abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            evaluate(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            evaluate(&[1.0], &[1.0]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            evaluate(&[1.0, -1.0], &[1.0, 0.0]),
            Err(Error::Domain { .. })
        ));
        let flat = evaluate(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(flat.r2, None);
        assert!(flat.mse > 0.0);
    }

    #[test]
    fn aggregate_single_and_pair() {
        let base = evaluate(&[1.0, 2.0, 3.0], &[1.1, 2.0, 2.7]).unwrap();
        let s = aggregate(&[base]).unwrap();
        let st = s.get(Metric::Mae).unwrap();
        assert_eq!(
            (st.mean, st.min, st.max, st.std),
            (base.mae, base.mae, base.mae, 0.0)
        );

        let mut a = base;
        a.r2 = Some(0.8);
        let mut b = base;
        b.r2 = Some(0.9);
        let s = aggregate(&[a, b]).unwrap().get(Metric::R2).unwrap();
        assert!((s.mean - 0.85).abs() < 1e-15);
        assert!((s.std - 0.05).abs() < 1e-15);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn reported_table_row_is_ordered() {
        let (mean, min, max) = (0.9105, 0.9067, 0.9140);
        assert!(min <= mean && mean <= max);
    }

    #[test]
    fn report_invariants_on_random_vectors() {
        let mut rng = Rng::seed_from(4);
        for _ in 0..200 {
            let n = 2 + rng.below(30);
            let y: Vec<f64> = (0..n).map(|_| rng.uniform_in(-0.5, 3.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.uniform_in(-0.5, 3.0)).collect();
            let r = evaluate(&y, &p).unwrap();
            assert!((r.rmse - math::sqrt(r.mse)).abs() < 1e-12);
            assert!((r.loss - r.mse / 2.0).abs() < 1e-12);
            assert!(r.mse >= 0.0 && r.mae >= 0.0);
            assert!(r.max_error >= r.medae && r.medae >= 0.0);
            assert!(r.r2.unwrap() <= 1.0);
        }
    }

    #[test]
    fn shift_and_scale_behaviour() {
        let mut rng = Rng::seed_from(6);
        let y: Vec<f64> = (0..25).map(|_| rng.uniform_in(0.0, 2.0)).collect();
        let p: Vec<f64> = (0..25).map(|_| rng.uniform_in(0.0, 2.0)).collect();
        let base = evaluate(&y, &p).unwrap();
        let shift = |v: &[f64]| v.iter().map(|x| x + 1.7).collect::<Vec<_>>();
        let s = evaluate(&shift(&y), &shift(&p)).unwrap();
        for (a, b) in [
            (base.mse, s.mse),
            (base.rmse, s.rmse),
            (base.mae, s.mae),
            (base.medae, s.medae),
            (base.max_error, s.max_error),
        ] {
            assert!((a - b).abs() < 1e-12);
        }
        let k = 3.5;
        let scale = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
        let s = evaluate(&scale(&y), &scale(&p)).unwrap();
        assert!((s.mse - k * k * base.mse).abs() < 1e-12);
        for (a, b) in [
            (base.rmse, s.rmse),
            (base.mae, s.mae),
            (base.medae, s.medae),
            (base.max_error, s.max_error),
        ] {
            assert!((k * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stats_are_ordered() {
        let s = Stats::of(&[0.3; 7]).unwrap();
        assert!(s.min <= s.mean && s.mean <= s.max);
        assert_eq!(s.std, 0.0);
    }
}
