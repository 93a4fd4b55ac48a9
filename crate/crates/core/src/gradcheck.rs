//! Central finite-difference checks for hand-written backward passes.

use alloc::vec::Vec;
use core::fmt;

use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            epsilon: 1e-5,
            rel_tol: 1e-4,
            abs_tol: 1e-7,
        }
    }
}

impl GradCheckConfig {
    pub fn is_valid(&self) -> bool {
        self.epsilon > 0.0 && self.rel_tol > 0.0 && self.abs_tol >= 0.0
    }

    /// `|a - n| <= rel_tol * max(|a|, |n|) + abs_tol`
    pub fn accepts(&self, analytic: f64, numeric: f64) -> bool {
        (analytic - numeric).abs()
            <= self.rel_tol * analytic.abs().max(numeric.abs()) + self.abs_tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Largest `|a - n| / (rel_tol * max + abs_tol)` seen; must stay ≤ 1.
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckFailure {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl fmt::Display for GradCheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gradient mismatch at coordinate {}: analytic {:e}, finite difference {:e}",
            self.index, self.analytic, self.numeric
        )
    }
}

/// Central difference of `f` along coordinate `index`.
pub fn central_difference(
    f: &mut impl FnMut(&[f64]) -> f64,
    x: &[f64],
    index: usize,
    eps: f64,
) -> f64 {
    let mut probe = x.to_vec();
    probe[index] = x[index] + eps;
    let up = f(&probe);
    probe[index] = x[index] - eps;
    let down = f(&probe);
    (up - down) / (2.0 * eps)
}

/// Compares `analytic` (the claimed gradient of `f` at `x`) against central
/// differences at `points` coordinates drawn without replacement under `seed`.
/// All coordinates are checked when `points >= x.len()`.
pub fn check_gradient(
    cfg: &GradCheckConfig,
    x: &[f64],
    analytic: &[f64],
    points: usize,
    seed: u64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<GradCheckReport, GradCheckFailure> {
    assert_eq!(
        x.len(),
        analytic.len(),
        "gradient length must match the point"
    );
    let mut indices: Vec<usize> = (0..x.len()).collect();
    Rng::seed_from(seed).shuffle(&mut indices);
    indices.truncate(points.min(x.len()));

    let mut worst: f64 = 0.0;
    for &i in &indices {
        let numeric = central_difference(&mut f, x, i, cfg.epsilon);
        let a = analytic[i];
        let allowed = cfg.rel_tol * a.abs().max(numeric.abs()) + cfg.abs_tol;
        worst = worst.max((a - numeric).abs() / allowed);
        if !cfg.accepts(a, numeric) {
            return Err(GradCheckFailure {
                index: i,
                analytic: a,
                numeric,
            });
        }
    }
    Ok(GradCheckReport {
        checked: indices.len(),
        worst_ratio: worst,
    })
}
