use alloc::vec::Vec;

use super::data::{Dataset, TrainSet};
use crate::error::{Error, Result};

/// Per-column min-max bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    fn fit(values: &[f64], width: usize) -> MinMax {
        let mut min = alloc::vec![f64::INFINITY; width];
        let mut max = alloc::vec![f64::NEG_INFINITY; width];
        for row in values.chunks(width) {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        MinMax { min, max }
    }

    /// Columns with zero range; these are mapped to 0.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.min.len())
            .filter(|&j| self.max[j] <= self.min[j])
            .collect()
    }

    fn apply(&self, v: f64, j: usize) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (v - self.min[j]) / range
        } else {
            0.0
        }
    }

    fn invert(&self, v: f64, j: usize) -> f64 {
        self.min[j] + v * (self.max[j] - self.min[j])
    }
}

/// Min-max scaling of features and target, fitted on training rows only.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalerState {
    pub features: MinMax,
    pub target: MinMax,
}

impl ScalerState {
    pub fn fit(train: &TrainSet) -> Result<ScalerState> {
        let d = &train.0;
        if d.is_empty() {
            return Err(Error::TooFewSamples { got: 0, needed: 1 });
        }
        Ok(ScalerState {
            features: MinMax::fit(d.features(), d.width()),
            target: MinMax::fit(d.targets(), 1),
        })
    }

    /// Feature columns that were constant in the training rows.
    pub fn warnings(&self) -> Vec<usize> {
        self.features.constant_columns()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let w = self.features.min.len();
        if data.width() != w {
            return Err(Error::LengthMismatch {
                left: data.width(),
                right: w,
            });
        }
        let features = data
            .features()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.features.apply(v, i % w))
            .collect();
        let targets = data
            .targets()
            .iter()
            .map(|&v| self.target.apply(v, 0))
            .collect();
        Dataset::new(features, targets, w)
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.features.apply(v, j))
            .collect()
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        self.target.apply(y, 0)
    }

    pub fn inverse_target(&self, y: f64) -> f64 {
        self.target.invert(y, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::{prop_assert, proptest};

    fn single_column(v: Vec<f64>) -> TrainSet {
        let n = v.len();
        TrainSet(Dataset::new(v, vec![0.0; n], 1).unwrap())
    }

    #[test]
    fn maps_to_unit_interval() {
        let s = ScalerState::fit(&single_column(vec![0.0, 5.0, 10.0])).unwrap();
        let out = s.transform(&single_column(vec![0.0, 5.0, 10.0]).0).unwrap();
        assert_eq!(out.features(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_feature_maps_to_zero_with_warning() {
        let s = ScalerState::fit(&single_column(vec![3.0, 3.0])).unwrap();
        assert_eq!(s.warnings(), vec![0]);
        assert_eq!(s.transform_row(&[3.0]), vec![0.0]);
    }

    #[test]
    fn held_out_rows_may_leave_the_unit_interval() {
        let s = ScalerState::fit(&single_column(vec![0.0, 10.0])).unwrap();
        assert_eq!(s.transform_row(&[15.0]), vec![1.5]);
    }

    proptest! {
        #[test]
        fn target_round_trip(ys in proptest::collection::vec(-1e4f64..1e4, 2..30)) {
            let n = ys.len();
            let t = TrainSet(Dataset::new(vec![0.0; n], ys.clone(), 1).unwrap());
            let s = ScalerState::fit(&t).unwrap();
            let scale = s.target.max[0] - s.target.min[0];
            for &y in &ys {
                let z = s.scale_target(y);
                if scale > 0.0 {
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&z));
                    prop_assert!((s.inverse_target(z) - y).abs() <= 1e-9 * (1.0 + y.abs()));
                }
            }
        }
    }
}
