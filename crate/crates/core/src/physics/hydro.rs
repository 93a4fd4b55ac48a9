use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use super::FarmLayout;
use crate::error::{invalid, Error, Result};
use crate::math;

/// Linear interpolation weights for `x` within ascending `xs`.
fn bracket(xs: &[f64], x: f64, op: &'static str) -> Result<(usize, usize, f64)> {
    let n = xs.len();
    if n == 1 {
        return if (x - xs[0]).abs() <= 1e-9 * xs[0].abs().max(1.0) {
            Ok((0, 0, 0.0))
        } else {
            Err(Error::Domain { op, value: x })
        };
    }
    let tol = 1e-9 * xs[n - 1].abs().max(1.0);
    if x < xs[0] - tol || x > xs[n - 1] + tol {
        return Err(Error::Domain { op, value: x });
    }
    let hi = xs.partition_point(|&v| v < x).clamp(1, n - 1);
    let lo = hi - 1;
    let t = ((x - xs[lo]) / (xs[hi] - xs[lo])).clamp(0.0, 1.0);
    Ok((lo, hi, t))
}

/// Frequency-dependent coefficients read from tables, interpolated linearly
/// in frequency (and in heading for the excitation).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub dofs: usize,
    /// Ascending.
    pub omegas: Vec<f64>,
    /// Per frequency, row-major `dofs x dofs`.
    pub added_mass: Vec<Vec<f64>>,
    pub damping: Vec<Vec<f64>>,
    /// Ascending wave headings (rad).
    pub headings: Vec<f64>,
    /// `[omega][heading][dof]`, per unit wave amplitude.
    pub excitation: Vec<Vec<Vec<Complex64>>>,
}

impl CoefficientTable {
    /// Frequency-independent coefficients for a single heading.
    pub fn constant(
        dofs: usize,
        added_mass: Vec<f64>,
        damping: Vec<f64>,
        heading: f64,
        excitation: Vec<Complex64>,
    ) -> Result<Self> {
        let t = CoefficientTable {
            dofs,
            omegas: vec![f64::NAN],
            added_mass: vec![added_mass],
            damping: vec![damping],
            headings: vec![heading],
            excitation: vec![vec![excitation]],
        };
        t.validate_shapes()?;
        Ok(t)
    }

    fn is_constant(&self) -> bool {
        self.omegas.len() == 1 && self.omegas[0].is_nan()
    }

    pub fn validate_shapes(&self) -> Result<()> {
        let n2 = self.dofs * self.dofs;
        let nw = self.omegas.len();
        if nw == 0 || self.headings.is_empty() {
            return Err(invalid("coefficients", "empty frequency or heading list"));
        }
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !self.is_constant() && !ascending(&self.omegas) {
            return Err(invalid(
                "coefficients",
                "frequencies must be strictly ascending",
            ));
        }
        if !ascending(&self.headings) {
            return Err(invalid(
                "coefficients",
                "headings must be strictly ascending",
            ));
        }
        let bad = self.added_mass.len() != nw
            || self.damping.len() != nw
            || self.excitation.len() != nw
            || self
                .added_mass
                .iter()
                .chain(&self.damping)
                .any(|m| m.len() != n2)
            || self
                .excitation
                .iter()
                .any(|h| h.len() != self.headings.len() || h.iter().any(|f| f.len() != self.dofs));
        if bad {
            return Err(invalid(
                "coefficients",
                "table dimensions do not match the degrees of freedom",
            ));
        }
        Ok(())
    }

    fn omega_weights(&self, omega: f64) -> Result<(usize, usize, f64)> {
        if self.is_constant() {
            Ok((0, 0, 0.0))
        } else {
            bracket(&self.omegas, omega, "coefficient frequency")
        }
    }

    pub fn added_mass(&self, omega: f64) -> Result<Vec<f64>> {
        let (a, b, t) = self.omega_weights(omega)?;
        Ok(lerp_real(&self.added_mass[a], &self.added_mass[b], t))
    }

    pub fn damping(&self, omega: f64) -> Result<Vec<f64>> {
        let (a, b, t) = self.omega_weights(omega)?;
        Ok(lerp_real(&self.damping[a], &self.damping[b], t))
    }

    pub fn excitation(&self, omega: f64, beta: f64) -> Result<Vec<Complex64>> {
        let (a, b, t) = self.omega_weights(omega)?;
        let (ha, hb, s) = bracket(&self.headings, beta, "excitation heading")?;
        let at = |w: usize| -> Vec<Complex64> {
            self.excitation[w][ha]
                .iter()
                .zip(&self.excitation[w][hb])
                .map(|(x, y)| x * (1.0 - s) + y * s)
                .collect()
        };
        let (fa, fb) = (at(a), at(b));
        Ok(fa
            .iter()
            .zip(&fb)
            .map(|(x, y)| x * (1.0 - t) + y * t)
            .collect())
    }
}

fn lerp_real(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Distance-decay interaction `q(d) = 1 + amplitude * sinc(d / length)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionKernel {
    pub amplitude: f64,
    pub length: f64,
}

impl Default for InteractionKernel {
    fn default() -> Self {
        InteractionKernel {
            amplitude: 0.1,
            length: 20.0,
        }
    }
}

impl InteractionKernel {
    pub fn q(&self, d: f64) -> f64 {
        1.0 + self.amplitude * math::sinc(d / self.length)
    }
}

/// Submerged-sphere array with PTO springs and dampers on every mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereParams {
    pub radius: f64,
    /// Depth of the sphere centre below the free surface.
    pub submergence: f64,
    pub rho: f64,
    pub g: f64,
    /// Body mass as a fraction of the displaced mass.
    pub mass_ratio: f64,
    /// Modes per body: 1 = heave only, 3 = surge, sway, heave.
    pub modes: usize,
    pub k_pto: f64,
    pub b_pto: f64,
}

impl Default for SphereParams {
    fn default() -> Self {
        SphereParams {
            radius: 5.0,
            submergence: 10.0,
            rho: 1025.0,
            g: 9.81,
            mass_ratio: 0.5,
            modes: 3,
            k_pto: 2.6e5,
            b_pto: 5.0e4,
        }
    }
}

impl SphereParams {
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius * self.radius * self.radius
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.radius,
            self.submergence,
            self.rho,
            self.g,
            self.mass_ratio,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid(
                "sphere",
                "radius, submergence, density, gravity and mass ratio must be positive",
            ));
        }
        if self.submergence <= self.radius {
            return Err(invalid("sphere", "the sphere must be fully submerged"));
        }
        if !(1..=3).contains(&self.modes) || self.modes == 2 {
            return Err(invalid(
                "sphere",
                "modes must be 1 (heave) or 3 (surge, sway, heave)",
            ));
        }
        if !(self.k_pto >= 0.0 && self.b_pto >= 0.0) {
            return Err(invalid("sphere", "PTO coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Added mass, half the displaced mass in every mode.
    pub fn added_mass(&self) -> f64 {
        0.5 * self.rho * self.volume()
    }

    /// Radiation damping `rho V omega (k R) exp(-2 k s)`, deep-water `k = omega^2 / g`.
    pub fn damping(&self, omega: f64) -> f64 {
        let k = omega * omega / self.g;
        self.rho * self.volume() * omega * k * self.radius * math::exp(-2.0 * k * self.submergence)
    }

    /// Excitation magnitudes `(horizontal, heave)` per unit amplitude, from the
    /// deep-water Haskind relations for an axisymmetric body.
    pub fn excitation_magnitude(&self, omega: f64) -> (f64, f64) {
        let b = self.damping(omega);
        let w3 = omega * omega * omega;
        let g3 = self.g * self.g * self.g;
        (
            math::sqrt(4.0 * self.rho * g3 * b / w3),
            math::sqrt(2.0 * self.rho * g3 * b / w3),
        )
    }
}

/// Analytic coefficients of a sphere array; bodies couple only through the
/// optional kernel, which scales each body's excitation by `prod_j q(d_ij)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereHydro {
    pub params: SphereParams,
    pub coords: Vec<(f64, f64)>,
    pub interaction: Vec<f64>,
}

impl SphereHydro {
    pub fn new(
        params: SphereParams,
        layout: &FarmLayout,
        kernel: Option<InteractionKernel>,
    ) -> Result<Self> {
        params.validate()?;
        let coords = layout.coords.clone();
        let interaction = (0..coords.len())
            .map(|i| match kernel {
                None => 1.0,
                Some(k) => (0..coords.len())
                    .filter(|&j| j != i)
                    .map(|j| {
                        let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                        k.q(math::hypot(dx, dy))
                    })
                    .product(),
            })
            .collect();
        Ok(SphereHydro {
            params,
            coords,
            interaction,
        })
    }

    pub fn dofs(&self) -> usize {
        self.params.modes * self.coords.len()
    }

    pub fn added_mass(&self) -> Vec<f64> {
        diagonal(self.dofs(), self.params.added_mass())
    }

    pub fn damping(&self, omega: f64) -> Vec<f64> {
        diagonal(self.dofs(), self.params.damping(omega))
    }

    pub fn excitation(&self, omega: f64, beta: f64) -> Vec<Complex64> {
        let p = &self.params;
        let k = omega * omega / p.g;
        let (fh, fv) = p.excitation_magnitude(omega);
        let mut f = Vec::with_capacity(self.dofs());
        for (&(x, y), &q) in self.coords.iter().zip(&self.interaction) {
            let phase = Complex64::from_polar(q, -k * (x * math::cos(beta) + y * math::sin(beta)));
            if p.modes == 3 {
                let i = Complex64::new(0.0, 1.0);
                f.push(i * phase * fh * math::cos(beta));
                f.push(i * phase * fh * math::sin(beta));
            }
            f.push(phase * fv);
        }
        f
    }
}

pub(crate) fn diagonal(n: usize, v: f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = v;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_linearly() {
        let t = CoefficientTable {
            dofs: 1,
            omegas: vec![1.0, 2.0],
            added_mass: vec![vec![10.0], vec![20.0]],
            damping: vec![vec![1.0], vec![3.0]],
            headings: vec![0.0, 1.0],
            excitation: vec![
                vec![
                    vec![Complex64::new(1.0, 0.0)],
                    vec![Complex64::new(3.0, 0.0)],
                ],
                vec![
                    vec![Complex64::new(2.0, 2.0)],
                    vec![Complex64::new(4.0, 2.0)],
                ],
            ],
        };
        t.validate_shapes().unwrap();
        assert_eq!(t.added_mass(1.25).unwrap(), vec![12.5]);
        assert_eq!(t.damping(2.0).unwrap(), vec![3.0]);
        assert_eq!(
            t.excitation(1.5, 0.5).unwrap(),
            vec![Complex64::new(2.5, 1.0)]
        );
        assert!(t.added_mass(2.5).is_err());
        assert!(t.excitation(1.5, 1.5).is_err());
    }

    #[test]
    fn sphere_added_mass_is_half_displaced() {
        let p = SphereParams::default();
        assert!((p.added_mass() - 0.5 * 1025.0 * 4.0 / 3.0 * PI * 125.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_value() {
        let k = InteractionKernel::default();
        assert_eq!(k.q(0.0), 1.1);
        assert!((k.q(20.0 * PI) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_body_excitation_magnitude_is_position_free() {
        let p = SphereParams::default();
        let a = SphereHydro::new(p, &FarmLayout::new(vec![(10.0, 20.0)]).unwrap(), None).unwrap();
        let b = SphereHydro::new(p, &FarmLayout::new(vec![(400.0, 120.0)]).unwrap(), None).unwrap();
        for (x, y) in a.excitation(0.8, 0.3).iter().zip(b.excitation(0.8, 0.3)) {
            assert!((x.norm() - y.norm()).abs() < 1e-6 * x.norm());
        }
    }
}
