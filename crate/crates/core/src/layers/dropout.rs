use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout: in training each element is zeroed with probability
/// `p` and survivors are scaled by `1 / (1 - p)`; evaluation is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Dropout {
    p: f64,
}

#[derive(Clone, Debug)]
pub struct DropoutCache {
    /// Per-element multiplier; empty when the pass was the identity.
    mask: Vec<f64>,
}

impl DropoutCache {
    pub fn backward(&self, grad: &Tensor) -> Tensor {
        if self.mask.is_empty() {
            return grad.clone();
        }
        let mut g = grad.clone();
        for (v, m) in g.data_mut().iter_mut().zip(&self.mask) {
            *v *= m;
        }
        g
    }
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(invalid(
                "dropout probability",
                alloc::format!("{p} not in [0, 1)"),
            ));
        }
        Ok(Dropout { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> (Tensor, DropoutCache) {
        if mode == Mode::Eval || self.p == 0.0 {
            return (x.clone(), DropoutCache { mask: Vec::new() });
        }
        let keep = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.uniform() < self.p { 0.0 } else { keep })
            .collect();
        let mut y = x.clone();
        for (v, m) in y.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        (y, DropoutCache { mask })
    }
}

/// Stateless form: applies dropout with a fresh stream seeded by `seed`.
pub fn dropout(x: &Tensor, p_drop: f64, mode: Mode, seed: u64) -> Result<Tensor> {
    let d = Dropout::new(p_drop)?;
    Ok(d.forward(x, mode, &mut Rng::seed_from(seed)).0)
}
