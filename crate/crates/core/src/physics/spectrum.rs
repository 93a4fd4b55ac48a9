use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::math;

/// Two-parameter Bretschneider density `S(omega)` in m^2 s.
pub fn bretschneider(hs: f64, tp: f64, omega: f64) -> Result<f64> {
    if !(hs > 0.0) {
        return Err(Error::Domain {
            op: "bretschneider hs",
            value: hs,
        });
    }
    if !(tp > 0.0) {
        return Err(Error::Domain {
            op: "bretschneider tp",
            value: tp,
        });
    }
    if !(omega > 0.0) {
        return Err(Error::Domain {
            op: "bretschneider omega",
            value: omega,
        });
    }
    Ok(bretschneider_unchecked(hs, tp, omega))
}

fn bretschneider_unchecked(hs: f64, tp: f64, omega: f64) -> f64 {
    let wp = 2.0 * PI / tp;
    let r4 = math::powf(wp / omega, 4.0);
    5.0 / 16.0 * hs * hs * r4 / omega * math::exp(-1.25 * r4)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Zeroth spectral moment by adaptive quadrature (analytically `hs^2 / 16`).
///
/// The density is negligible below `omega_p / 10`; above `50 omega_p` the
/// exponential is within 1e-6 of one and the `omega^-5` tail is added exactly.
pub fn spectral_m0(hs: f64, tp: f64) -> Result<f64> {
    bretschneider(hs, tp, 1.0)?;
    let wp = 2.0 * PI / tp;
    let (lo, hi) = (0.1 * wp, 50.0 * wp);
    let body = adaptive_simpson(
        &|w| bretschneider_unchecked(hs, tp, w),
        lo,
        hi,
        1e-10 * hs * hs,
    );
    let tail = 5.0 / 64.0 * hs * hs * math::powf(wp / hi, 4.0);
    Ok(body + tail)
}

/// Log-spaced frequency grid for the irregular-sea integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub points: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Point count of the refinement pass; `None` skips the convergence check.
    pub refine: Option<usize>,
    /// Relative change between passes above which the result is flagged.
    pub tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            points: 50,
            omega_min: 0.1,
            omega_max: 6.3,
            refine: Some(200),
            tolerance: 0.01,
        }
    }
}

impl Quadrature {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || self.refine.is_some_and(|r| r < 2) {
            return Err(invalid("quadrature", "need at least two points"));
        }
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min && self.omega_max.is_finite())
        {
            return Err(invalid("quadrature", "need 0 < omega_min < omega_max"));
        }
        Ok(())
    }

    pub fn grid(&self, points: usize) -> Vec<f64> {
        let (a, b) = (math::ln(self.omega_min), math::ln(self.omega_max));
        (0..points)
            .map(|i| math::exp(a + (b - a) * i as f64 / (points - 1) as f64))
            .collect()
    }
}

/// Trapezoid rule over sample points `(x_i, y_i)`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroth_moment_matches_closed_form() {
        for (hs, tp) in [(3.0, 10.0), (1.0, 5.0), (6.5, 14.0)] {
            let m0 = spectral_m0(hs, tp).unwrap();
            let exact = hs * hs / 16.0;
            assert!((m0 - exact).abs() / exact < 5e-3, "{m0} vs {exact}");
        }
        assert!((spectral_m0(3.0, 10.0).unwrap() - 0.5625).abs() < 1e-6);
    }

    #[test]
    fn vanishes_near_zero_and_scales_with_hs_squared() {
        assert!(bretschneider(3.0, 10.0, 1e-3).unwrap() < 1e-300);
        for w in [0.3, 0.6, 1.0, 2.5] {
            let a = bretschneider(1.5, 9.0, w).unwrap();
            let b = bretschneider(3.0, 9.0, w).unwrap();
            assert!((b - 4.0 * a).abs() <= 1e-15 * b.max(1.0));
        }
    }

    #[test]
    fn peak_is_at_the_peak_frequency() {
        let tp = 8.0;
        let wp = 2.0 * PI / tp;
        let s = |w| bretschneider(2.0, tp, w).unwrap();
        assert!(s(wp) > s(wp * 0.98) && s(wp) > s(wp * 1.02));
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(bretschneider(0.0, 10.0, 1.0).is_err());
        assert!(bretschneider(1.0, -1.0, 1.0).is_err());
        assert!(bretschneider(1.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let q = Quadrature::default();
        let g = q.grid(q.points);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 0.1).abs() < 1e-12 && (g[49] - 6.3).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
