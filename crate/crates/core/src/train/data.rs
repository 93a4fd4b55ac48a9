use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng::Rng;

/// Row-major feature matrix with one target per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    targets: Vec<f64>,
    width: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, targets: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(invalid("width", "must be positive"));
        }
        if features.len() != targets.len() * width {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: targets.len() * width,
            });
        }
        Ok(Dataset {
            features,
            targets,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.width);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Dataset {
            features,
            targets,
            width: self.width,
        }
    }
}

/// Rows a model (and any fitted preprocessing) may learn from.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSet(pub Dataset);

/// Rows reserved for scoring; nothing is fitted on them.
#[derive(Clone, Debug, PartialEq)]
pub struct HeldOutSet(pub Dataset);

#[derive(Clone, Debug, PartialEq)]
pub struct Fold {
    pub index: usize,
    pub train: TrainSet,
    pub held_out: HeldOutSet,
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    Rng::seed_from(seed).shuffle(&mut idx);
    idx
}

/// Shuffled split with `round(fraction * n)` training rows.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid("fraction", "must lie in (0, 1)"));
    }
    let n_train = math::round(fraction * n as f64) as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::TooFewSamples { got: n, needed: 2 });
    }
    let mut idx = permutation(n, seed);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// The 70/30 train/test split.
pub fn split_70_30(data: &Dataset, seed: u64) -> Result<(TrainSet, HeldOutSet)> {
    let (tr, te) = split_indices(data.len(), 0.7, seed)?;
    Ok((TrainSet(data.subset(&tr)), HeldOutSet(data.subset(&te))))
}

/// Index sets of `k` shuffled folds; fold sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(invalid("k", "need at least two folds"));
    }
    if n < k {
        return Err(Error::TooFewSamples { got: n, needed: k });
    }
    let idx = permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

pub fn kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let parts = kfold_indices(data.len(), k, seed)?;
    Ok((0..k)
        .map(|f| {
            let train: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            Fold {
                index: f,
                train: TrainSet(data.subset(&train)),
                held_out: HeldOutSet(data.subset(&parts[f])),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn toy(n: usize) -> Dataset {
        Dataset::new(
            (0..2 * n).map(|v| v as f64).collect(),
            (0..n).map(|v| v as f64).collect(),
            2,
        )
        .unwrap()
    }

    #[test]
    fn seventy_thirty() {
        let (tr, te) = split_70_30(&toy(100), 1).unwrap();
        assert_eq!((tr.0.len(), te.0.len()), (70, 30));
        let mut all: Vec<f64> =
            tr.0.targets()
                .iter()
                .chain(te.0.targets())
                .copied()
                .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|v| v as f64).collect::<Vec<_>>());
        // Rows stay attached to their targets.
        assert_eq!(
            tr.0.row(0),
            &[2.0 * tr.0.targets()[0], 2.0 * tr.0.targets()[0] + 1.0]
        );
    }

    #[test]
    fn split_is_seeded() {
        assert_eq!(
            split_70_30(&toy(50), 3).unwrap(),
            split_70_30(&toy(50), 3).unwrap()
        );
        assert_ne!(
            split_70_30(&toy(50), 3).unwrap(),
            split_70_30(&toy(50), 4).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Dataset::new(vec![1.0; 5], vec![1.0; 2], 2).is_err());
        assert!(split_70_30(&toy(1), 0).is_err());
        assert!(kfold_indices(5, 10, 0).is_err());
        assert!(kfold_indices(5, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_rows(n in 10usize..200, k in 2usize..11, seed in 0u64..1000) {
            let folds = kfold_indices(n, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            let mut seen = vec![false; n];
            for f in &folds {
                prop_assert!(f.len() == n / k || f.len() == n / k + 1);
                for &i in f {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn fold_train_excludes_held_out() {
        for f in kfold(&toy(23), 5, 2).unwrap() {
            assert_eq!(f.train.0.len() + f.held_out.0.len(), 23);
            for t in f.held_out.0.targets() {
                assert!(!f.train.0.targets().contains(t));
            }
        }
    }
}
