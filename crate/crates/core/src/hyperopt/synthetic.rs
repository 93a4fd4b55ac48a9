use alloc::vec::Vec;

use super::SearchSpace;
use crate::error::{invalid, Result};

/// `1 - sum_i (u_i(x) - u_i(x*))^2`, where `u_i` is the position of a value
/// along its parameter's internal axis, scaled to `[0, 1]`. Separable, with
/// maximum exactly 1 at the admissible point `x*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableQuadratic {
    pub space: SearchSpace,
    pub optimum: Vec<f64>,
}

impl SeparableQuadratic {
    pub fn new(space: &SearchSpace, optimum: &[f64]) -> Result<Self> {
        space.check_point(optimum)?;
        if !space.contains(optimum) {
            return Err(invalid("optimum", "must be an admissible point"));
        }
        Ok(SeparableQuadratic {
            space: space.clone(),
            optimum: optimum.to_vec(),
        })
    }

    /// Optimum 40% of the way along every axis, snapped to the domain.
    pub fn reference(space: &SearchSpace) -> Self {
        let optimum = space
            .params
            .iter()
            .map(|p| {
                let (a, b) = p.domain.internal_bounds();
                p.domain.from_internal(a + 0.4 * (b - a))
            })
            .collect();
        SeparableQuadratic {
            space: space.clone(),
            optimum,
        }
    }

    pub const OPTIMUM_SCORE: f64 = 1.0;

    pub fn score(&self, x: &[f64]) -> f64 {
        1.0 - self
            .space
            .params
            .iter()
            .zip(x.iter().zip(&self.optimum))
            .map(|(p, (&v, &o))| {
                let d = p.domain.normalise(v) - p.domain.normalise(o);
                d * d
            })
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_scores_one() {
        let s = SearchSpace::hyperparams();
        let q = SeparableQuadratic::reference(&s);
        assert!(s.contains(&q.optimum));
        assert_eq!(q.score(&q.optimum), SeparableQuadratic::OPTIMUM_SCORE);
        let mut x = q.optimum.clone();
        x[6] += 0.1;
        assert!(q.score(&x) < 1.0);
    }
}
