//! Power as a function of where the last converter goes, with the rest fixed.

use alloc::vec::Vec;

use super::{
    annual_average_power, distance, FarmLayout, FarmState, Quadrature, SeaState, FARM_SIDE,
    SAFE_DISTANCE,
};
use crate::error::{invalid, Error, Result};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    /// `None` where the cell is too close to a fixed converter.
    pub power: Option<f64>,
}

impl Cell {
    pub fn feasible(&self) -> bool {
        self.power.is_some()
    }
}

/// Dense grid, `x` varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub step: f64,
    /// Points per axis.
    pub side: usize,
    pub cells: Vec<Cell>,
}

impl Landscape {
    /// Feasible cell with the most power; the first one on ties.
    pub fn argmax(&self) -> Option<&Cell> {
        let mut best: Option<&Cell> = None;
        for c in &self.cells {
            if let Some(p) = c.power {
                if best.and_then(|b| b.power).is_none_or(|bp| p > bp) {
                    best = Some(c);
                }
            }
        }
        best
    }

    pub fn masked(&self) -> usize {
        self.cells.iter().filter(|c| !c.feasible()).count()
    }

    /// Builds the grid from per-cell powers in [`landscape_cells`] order.
    pub fn from_powers(
        step: f64,
        positions: &[(f64, f64, bool)],
        powers: Vec<Option<f64>>,
    ) -> Result<Self> {
        if positions.len() != powers.len() {
            return Err(Error::LengthMismatch {
                left: positions.len(),
                right: powers.len(),
            });
        }
        if !powers.iter().any(Option::is_some) {
            return Err(Error::NoFeasibleCell);
        }
        let side = math::sqrt(positions.len() as f64) as usize;
        let cells = positions
            .iter()
            .zip(powers)
            .map(|(&(x, y, _), power)| Cell { x, y, power })
            .collect();
        Ok(Landscape { step, side, cells })
    }
}

/// Grid coordinates `0, step, 2 step, ... <= 566` on both axes, with
/// feasibility against the fixed converters.
pub fn landscape_cells(fixed: &FarmLayout, step: f64) -> Result<Vec<(f64, f64, bool)>> {
    if !(step > 0.0 && step <= FARM_SIDE) {
        return Err(invalid(
            "grid step",
            alloc::format!("{step} must lie in (0, {FARM_SIDE}]"),
        ));
    }
    let side = math::floor(FARM_SIDE / step + 1e-9) as usize + 1;
    let mut out = Vec::with_capacity(side * side);
    for ix in 0..side {
        for iy in 0..side {
            let p = (ix as f64 * step, iy as f64 * step);
            let ok = fixed
                .coords
                .iter()
                .all(|&q| distance(p, q) >= SAFE_DISTANCE);
            out.push((p.0, p.1, ok));
        }
    }
    Ok(out)
}

/// Annual average power of the farm with the last converter at `(x, y)`.
pub fn evaluate_cell<B>(
    fixed: &FarmLayout,
    builder: &B,
    climate: &[SeaState],
    quad: &Quadrature,
    x: f64,
    y: f64,
) -> Result<f64>
where
    B: Fn(&FarmLayout) -> Result<FarmState> + ?Sized,
{
    let mut coords = fixed.coords.clone();
    coords.push((x, y));
    let fs = builder(&FarmLayout::new(coords)?)?;
    Ok(annual_average_power(&fs, climate, quad)?.total)
}

/// Sequential scan over every grid cell.
pub fn landscape_scan<B>(
    fixed: &FarmLayout,
    builder: &B,
    climate: &[SeaState],
    quad: &Quadrature,
    step: f64,
) -> Result<Landscape>
where
    B: Fn(&FarmLayout) -> Result<FarmState> + ?Sized,
{
    let positions = landscape_cells(fixed, step)?;
    if !positions.iter().any(|p| p.2) {
        return Err(Error::NoFeasibleCell);
    }
    let powers = positions
        .iter()
        .map(|&(x, y, ok)| {
            if ok {
                evaluate_cell(fixed, builder, climate, quad, x, y).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Landscape::from_powers(step, &positions, powers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{InteractionKernel, SphereParams};
    use alloc::vec;

    fn climate() -> Vec<SeaState> {
        vec![
            SeaState {
                hs: 2.0,
                tp: 9.0,
                beta: 0.0,
                occurrence: 0.6,
            },
            SeaState {
                hs: 3.0,
                tp: 11.0,
                beta: 0.3,
                occurrence: 0.4,
            },
        ]
    }

    fn quick() -> Quadrature {
        Quadrature {
            points: 20,
            refine: None,
            ..Quadrature::default()
        }
    }

    #[test]
    fn lone_converter_sees_a_flat_landscape() {
        let builder = |l: &FarmLayout| FarmState::spheres(SphereParams::default(), l, None);
        let land = landscape_scan(
            &FarmLayout::new(vec![]).unwrap(),
            &builder,
            &climate(),
            &quick(),
            141.5,
        )
        .unwrap();
        assert_eq!(land.cells.len(), 25);
        let p0 = land.cells[0].power.unwrap();
        for c in &land.cells {
            assert!((c.power.unwrap() - p0).abs() <= 1e-12 * p0);
        }
    }

    #[test]
    fn mask_is_exactly_the_spacing_rule() {
        let fixed = FarmLayout::new(vec![(100.0, 100.0), (300.0, 300.0), (450.0, 120.0)]).unwrap();
        let cells = landscape_cells(&fixed, 10.0).unwrap();
        assert_eq!(cells.len(), 57 * 57);
        for &(x, y, ok) in &cells {
            let near = fixed.coords.iter().any(|&q| distance((x, y), q) < 50.0);
            assert_eq!(ok, !near);
        }
    }

    #[test]
    fn argmax_matches_brute_force() {
        let kernel = InteractionKernel::default();
        let builder =
            move |l: &FarmLayout| FarmState::spheres(SphereParams::default(), l, Some(kernel));
        let fixed = FarmLayout::new(vec![(200.0, 200.0), (330.0, 260.0)]).unwrap();
        let (clim, quad, step) = (climate(), quick(), 40.0);
        let land = landscape_scan(&fixed, &builder, &clim, &quad, step).unwrap();
        let mut best: Option<(f64, f64, f64)> = None;
        for (x, y, ok) in landscape_cells(&fixed, step).unwrap() {
            if ok {
                let p = evaluate_cell(&fixed, &builder, &clim, &quad, x, y).unwrap();
                if best.is_none_or(|b| p > b.2) {
                    best = Some((x, y, p));
                }
            }
        }
        let (bx, by, bp) = best.unwrap();
        let top = land.argmax().unwrap();
        assert_eq!((top.x, top.y, top.power.unwrap()), (bx, by, bp));
        let p0 = land.cells.iter().find_map(|c| c.power).unwrap();
        assert!(land.cells.iter().filter_map(|c| c.power).any(|p| p != p0));
    }

    #[test]
    fn crowded_farm_has_no_feasible_cell() {
        // Fixed buoys every 60 m leave no point 50 m from all of them.
        let mut coords = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                coords.push((i as f64 * 60.0 + 13.0, j as f64 * 60.0 + 13.0));
            }
        }
        let fixed = FarmLayout::new(coords).unwrap();
        let builder = |l: &FarmLayout| FarmState::spheres(SphereParams::default(), l, None);
        assert_eq!(
            landscape_scan(&fixed, &builder, &climate(), &quick(), 20.0),
            Err(Error::NoFeasibleCell)
        );
    }

    #[test]
    fn bad_step_rejected() {
        let fixed = FarmLayout::new(vec![]).unwrap();
        assert!(landscape_cells(&fixed, 0.0).is_err());
        assert!(landscape_cells(&fixed, -3.0).is_err());
    }
}
