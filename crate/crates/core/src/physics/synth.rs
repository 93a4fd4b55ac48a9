//! Synthetic layout/power rows in the same shape as the real datasets:
//! `x1, y1, ..., xN, yN, p1, ..., pN, total`.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    annual_average_power, distance, FarmLayout, FarmState, InteractionKernel, Quadrature, SeaState,
    SphereParams, FARM_SIDE, SAFE_DISTANCE,
};
use crate::error::{invalid, Result};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_wec: usize,
    pub sphere: SphereParams,
    pub kernel: Option<InteractionKernel>,
    pub climate: Vec<SeaState>,
    pub quadrature: Quadrature,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_wec: 16,
            sphere: SphereParams {
                modes: 1,
                ..SphereParams::default()
            },
            kernel: Some(InteractionKernel::default()),
            climate: vec![SeaState {
                hs: 2.5,
                tp: 10.0,
                beta: 0.0,
                occurrence: 1.0,
            }],
            quadrature: Quadrature {
                points: 30,
                refine: None,
                ..Quadrature::default()
            },
        }
    }
}

impl SynthConfig {
    /// Columns per generated row.
    pub fn width(&self) -> usize {
        3 * self.n_wec + 1
    }
}

/// Uniform layout by rejection sampling, respecting the safe distance.
pub fn random_layout(n: usize, rng: &mut Rng) -> Result<FarmLayout> {
    for _ in 0..100 {
        let mut coords: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut tries = 0;
        while coords.len() < n && tries < 10_000 {
            tries += 1;
            let p = (
                rng.uniform_in(0.0, FARM_SIDE),
                rng.uniform_in(0.0, FARM_SIDE),
            );
            if coords.iter().all(|&q| distance(p, q) >= SAFE_DISTANCE) {
                coords.push(p);
            }
        }
        if coords.len() == n {
            return FarmLayout::new(coords);
        }
    }
    Err(invalid(
        "layout",
        alloc::format!("could not place {n} converters"),
    ))
}

/// One row for an explicit layout.
pub fn row_for_layout(cfg: &SynthConfig, layout: &FarmLayout) -> Result<Vec<f64>> {
    let fs = FarmState::spheres(cfg.sphere, layout, cfg.kernel)?;
    let p = annual_average_power(&fs, &cfg.climate, &cfg.quadrature)?;
    let mut row = layout.flat();
    row.extend_from_slice(&p.per_body);
    row.push(p.per_body.iter().sum());
    Ok(row)
}

/// Row `index` of the seeded stream; rows are independent of each other, so
/// they can be produced in any order or in parallel.
pub fn generate_row(cfg: &SynthConfig, seed: u64, index: u64) -> Result<Vec<f64>> {
    let mut rng = Rng::seed_from(seed).fork(index);
    let layout = random_layout(cfg.n_wec, &mut rng)?;
    row_for_layout(cfg, &layout)
}

/// `rows` random layouts with their powers, reproducible from `seed`.
pub fn generate_rows(cfg: &SynthConfig, rows: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..rows as u64)
        .map(|i| generate_row(cfg, seed, i))
        .collect()
}
