//! Frequency-domain power model of a wave energy converter array.
//!
//! Each body has `modes` degrees of freedom; vectors and matrices are
//! body-major (all modes of body 0, then body 1, ...). Excitation and motion
//! amplitudes are per unit wave amplitude.

pub mod hydro;
pub mod landscape;
pub mod linalg;
pub mod spectrum;
pub mod synth;

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

pub use hydro::{CoefficientTable, InteractionKernel, SphereHydro, SphereParams};
pub use landscape::{evaluate_cell, landscape_cells, landscape_scan, Cell, Landscape};
pub use spectrum::{bretschneider, spectral_m0, Quadrature};
pub use synth::{generate_row, generate_rows, random_layout, row_for_layout, SynthConfig};

use crate::error::{invalid, Error, Result};
use crate::math;
use linalg::{norm1, Lu};
use spectrum::trapezoid;

/// Side of the square deployment area (m).
pub const FARM_SIDE: f64 = 566.0;
/// Minimum spacing between converters (m).
pub const SAFE_DISTANCE: f64 = 50.0;
/// Condition-number estimate above which a solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct FarmLayout {
    pub coords: Vec<(f64, f64)>,
}

impl FarmLayout {
    /// Checks bounds and the pairwise safe distance.
    pub fn new(coords: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, y) in &coords {
            if !(0.0..=FARM_SIDE).contains(&x) || !(0.0..=FARM_SIDE).contains(&y) {
                return Err(invalid(
                    "layout",
                    alloc::format!("({x}, {y}) lies outside [0, {FARM_SIDE}]^2"),
                ));
            }
        }
        for i in 0..coords.len() {
            for j in 0..i {
                let d = distance(coords[i], coords[j]);
                if d < SAFE_DISTANCE {
                    return Err(invalid(
                        "layout",
                        alloc::format!(
                            "converters {j} and {i} are {d:.2} m apart (minimum {SAFE_DISTANCE} m)"
                        ),
                    ));
                }
            }
        }
        Ok(FarmLayout { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Flat `x1, y1, x2, y2, ...`.
    pub fn flat(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|&(x, y)| [x, y]).collect()
    }
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    math::hypot(a.0 - b.0, a.1 - b.1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeaState {
    /// Significant wave height (m).
    pub hs: f64,
    /// Peak period (s).
    pub tp: f64,
    /// Heading (rad).
    pub beta: f64,
    pub occurrence: f64,
}

impl SeaState {
    pub fn validate(&self) -> Result<()> {
        if !(self.hs > 0.0 && self.tp > 0.0 && self.hs.is_finite() && self.tp.is_finite()) {
            return Err(invalid("sea state", "hs and tp must be positive"));
        }
        if !(0.0..=1.0).contains(&self.occurrence) || !self.beta.is_finite() {
            return Err(invalid(
                "sea state",
                "occurrence must lie in [0, 1] and heading be finite",
            ));
        }
        Ok(())
    }
}

/// Every state valid and occurrences summing to one within 1e-9.
pub fn validate_climate(climate: &[SeaState]) -> Result<()> {
    if climate.is_empty() {
        return Err(invalid("climate", "no sea states"));
    }
    for s in climate {
        s.validate()?;
    }
    let sum: f64 = climate.iter().map(|s| s.occurrence).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::OccurrenceSum { sum });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Hydro {
    Table(CoefficientTable),
    Spheres(SphereHydro),
}

/// Everything needed to assemble the equation of motion at any frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct FarmState {
    pub n_wec: usize,
    pub modes: usize,
    /// Diagonal of the mass matrix.
    pub mass: Vec<f64>,
    /// Row-major `dofs x dofs`.
    pub k_pto: Vec<f64>,
    pub b_pto: Vec<f64>,
    pub hydro: Hydro,
}

fn is_symmetric_psd(m: &[f64], n: usize) -> bool {
    let scale = m
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (m[i * n + j] - m[j * n + i]).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    // Cholesky of M + tiny * I.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d =
            m[j * n + j] + 1e-12 * scale - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
        if d < 0.0 {
            return false;
        }
        d = math::sqrt(d);
        l[j * n + j] = d;
        for i in j + 1..n {
            let s = m[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = if d > 0.0 { s / d } else { 0.0 };
        }
    }
    true
}

impl FarmState {
    pub fn new(
        n_wec: usize,
        modes: usize,
        mass: Vec<f64>,
        k_pto: Vec<f64>,
        b_pto: Vec<f64>,
        hydro: Hydro,
    ) -> Result<Self> {
        let fs = FarmState {
            n_wec,
            modes,
            mass,
            k_pto,
            b_pto,
            hydro,
        };
        fs.validate()?;
        Ok(fs)
    }

    /// A sphere array at `layout` with identical PTOs on every mode.
    pub fn spheres(
        params: SphereParams,
        layout: &FarmLayout,
        kernel: Option<InteractionKernel>,
    ) -> Result<Self> {
        let hydro = SphereHydro::new(params, layout, kernel)?;
        let n = hydro.dofs();
        FarmState::new(
            layout.len(),
            params.modes,
            vec![params.mass_ratio * params.rho * params.volume(); n],
            hydro::diagonal(n, params.k_pto),
            hydro::diagonal(n, params.b_pto),
            Hydro::Spheres(hydro),
        )
    }

    pub fn dofs(&self) -> usize {
        self.n_wec * self.modes
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dofs();
        if n == 0 {
            return Err(invalid("farm", "no degrees of freedom"));
        }
        if self.mass.len() != n || self.k_pto.len() != n * n || self.b_pto.len() != n * n {
            return Err(invalid("farm", "matrix sizes do not match n_wec * modes"));
        }
        if self.mass.iter().any(|m| !(*m > 0.0)) {
            return Err(invalid("farm", "mass must be positive"));
        }
        if !is_symmetric_psd(&self.b_pto, n) {
            return Err(invalid(
                "farm",
                "PTO damping must be symmetric positive semidefinite",
            ));
        }
        let hydro_dofs = match &self.hydro {
            Hydro::Table(t) => {
                t.validate_shapes()?;
                t.dofs
            }
            Hydro::Spheres(s) => s.dofs(),
        };
        if hydro_dofs != n {
            return Err(invalid(
                "farm",
                "hydrodynamic coefficients have the wrong size",
            ));
        }
        Ok(())
    }

    fn added_mass(&self, omega: f64) -> Result<Vec<f64>> {
        match &self.hydro {
            Hydro::Table(t) => t.added_mass(omega),
            Hydro::Spheres(s) => Ok(s.added_mass()),
        }
    }

    fn damping(&self, omega: f64) -> Result<Vec<f64>> {
        match &self.hydro {
            Hydro::Table(t) => t.damping(omega),
            Hydro::Spheres(s) => Ok(s.damping(omega)),
        }
    }

    pub fn excitation(&self, omega: f64, beta: f64) -> Result<Vec<Complex64>> {
        match &self.hydro {
            Hydro::Table(t) => t.excitation(omega, beta),
            Hydro::Spheres(s) => Ok(s.excitation(omega, beta)),
        }
    }

    /// `-omega^2 (M + A) + i omega (B + B_pto) + K_pto`.
    pub fn system_matrix(&self, omega: f64) -> Result<Vec<Complex64>> {
        let n = self.dofs();
        let a = self.added_mass(omega)?;
        let b = self.damping(omega)?;
        let w2 = omega * omega;
        Ok((0..n * n)
            .map(|k| {
                let m = if k % (n + 1) == 0 {
                    self.mass[k / n]
                } else {
                    0.0
                };
                Complex64::new(
                    -w2 * (m + a[k]) + self.k_pto[k],
                    omega * (b[k] + self.b_pto[k]),
                )
            })
            .collect())
    }
}

/// Complex motion amplitudes at frequency `omega` and heading `beta`.
pub fn solve_motion(fs: &FarmState, omega: f64, beta: f64) -> Result<Vec<Complex64>> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain {
            op: "solve_motion omega",
            value: omega,
        });
    }
    let n = fs.dofs();
    let s = fs.system_matrix(omega)?;
    let f = fs.excitation(omega, beta)?;
    let lu = Lu::factor(&s, n);
    let condition = norm1(&s, n) * lu.inverse_norm1_estimate();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { omega, condition });
    }
    let mut x = lu.solve(&f);
    // One refinement step keeps the residual near round-off.
    let r: Vec<Complex64> = linalg::matvec(&s, &x, n)
        .iter()
        .zip(&f)
        .map(|(sx, fi)| fi - sx)
        .collect();
    for (xi, di) in x.iter_mut().zip(lu.solve(&r)) {
        *xi += di;
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerBreakdown {
    pub total: f64,
    pub per_body: Vec<f64>,
}

/// `(omega^2 / 2) Re(x^H B_pto x)`, split by body.
pub fn power_from_motion(fs: &FarmState, omega: f64, x: &[Complex64]) -> PowerBreakdown {
    let n = fs.dofs();
    let half_w2 = 0.5 * omega * omega;
    let mut per_body = vec![0.0; fs.n_wec];
    for i in 0..n {
        let bx: Complex64 = (0..n).map(|j| x[j] * fs.b_pto[i * n + j]).sum();
        per_body[i / fs.modes] += half_w2 * (x[i].conj() * bx).re;
    }
    PowerBreakdown {
        total: per_body.iter().sum(),
        per_body,
    }
}

/// Mean absorbed power in a regular wave of unit amplitude.
pub fn mean_power_regular(fs: &FarmState, omega: f64, beta: f64) -> Result<PowerBreakdown> {
    let x = solve_motion(fs, omega, beta)?;
    Ok(power_from_motion(fs, omega, &x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrregularPower {
    pub total: f64,
    pub per_body: Vec<f64>,
    /// Relative change against the refined grid, when checked.
    pub refinement_change: Option<f64>,
    /// The refinement check moved the result by more than the tolerance.
    pub unconverged: bool,
}

fn integrate(
    sea: &SeaState,
    omegas: &[f64],
    power: &mut dyn FnMut(f64) -> Result<PowerBreakdown>,
) -> Result<PowerBreakdown> {
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for &w in omegas {
        let s = bretschneider(sea.hs, sea.tp, w)?;
        let p = power(w)?;
        if curves.is_empty() {
            curves = vec![Vec::with_capacity(omegas.len()); p.per_body.len()];
        }
        for (c, v) in curves.iter_mut().zip(&p.per_body) {
            c.push(2.0 * s * v);
        }
    }
    let per_body: Vec<f64> = curves.iter().map(|c| trapezoid(omegas, c)).collect();
    Ok(PowerBreakdown {
        total: per_body.iter().sum(),
        per_body,
    })
}

/// `2 * integral S(omega) P(omega) d omega` for an arbitrary regular-wave power curve.
pub fn irregular_power_with(
    sea: &SeaState,
    quad: &Quadrature,
    power: &mut dyn FnMut(f64) -> Result<PowerBreakdown>,
) -> Result<IrregularPower> {
    sea.validate()?;
    quad.validate()?;
    let base = integrate(sea, &quad.grid(quad.points), power)?;
    let refinement_change = match quad.refine {
        Some(points) => {
            let fine = integrate(sea, &quad.grid(points), power)?;
            let denom = fine.total.abs().max(f64::MIN_POSITIVE);
            Some((fine.total - base.total).abs() / denom)
        }
        None => None,
    };
    Ok(IrregularPower {
        total: base.total,
        per_body: base.per_body,
        refinement_change,
        unconverged: refinement_change.is_some_and(|c| c > quad.tolerance),
    })
}

/// Mean power absorbed by the farm in an irregular sea.
pub fn irregular_power(
    fs: &FarmState,
    sea: &SeaState,
    quad: &Quadrature,
) -> Result<IrregularPower> {
    irregular_power_with(sea, quad, &mut |w| mean_power_regular(fs, w, sea.beta))
}

/// Occurrence-weighted mean of `values`.
pub fn weighted_average(values: &[f64], occurrences: &[f64]) -> Result<f64> {
    if values.len() != occurrences.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: occurrences.len(),
        });
    }
    let sum: f64 = occurrences.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || occurrences.iter().any(|o| !(0.0..=1.0).contains(o)) {
        return Err(Error::OccurrenceSum { sum });
    }
    Ok(values.iter().zip(occurrences).map(|(v, o)| v * o).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnualPower {
    pub total: f64,
    pub per_body: Vec<f64>,
    /// Irregular-sea power of each climate entry.
    pub per_state: Vec<f64>,
    /// Climate entries whose quadrature check failed.
    pub unconverged: Vec<usize>,
}

/// Occurrence-weighted irregular power over a climate table.
pub fn annual_average_power(
    fs: &FarmState,
    climate: &[SeaState],
    quad: &Quadrature,
) -> Result<AnnualPower> {
    validate_climate(climate)?;
    let mut per_body = vec![0.0; fs.n_wec];
    let mut per_state = Vec::with_capacity(climate.len());
    let mut unconverged = Vec::new();
    for (i, sea) in climate.iter().enumerate() {
        let p = irregular_power(fs, sea, quad)?;
        for (acc, v) in per_body.iter_mut().zip(&p.per_body) {
            *acc += sea.occurrence * v;
        }
        per_state.push(p.total);
        if p.unconverged {
            unconverged.push(i);
        }
    }
    let occ: Vec<f64> = climate.iter().map(|s| s.occurrence).collect();
    Ok(AnnualPower {
        total: weighted_average(&per_state, &occ)?,
        per_body,
        per_state,
        unconverged,
    })
}
