use alloc::vec;
use alloc::vec::Vec;

use super::{check_width, Dense, Parameterized};
use crate::error::{invalid, Result};
use crate::math::sigmoid;
use crate::rng::Rng;
use crate::tensor::{gemm_nn, gemm_nt, Tensor};

/// Squeeze-and-excitation gate over the channel axis of `[T, C]`.
///
/// squeeze `s = mean_t x`, excitation `e = sigmoid(fc2(relu(fc1(s))))`,
/// output `x[t, c] * e[c]`. The bottleneck width is `C / reduce_ratio`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeBlock {
    pub reduce_ratio: usize,
    pub fc1: Dense,
    pub fc2: Dense,
}

#[derive(Clone, Debug)]
pub struct SeCache {
    x: Tensor,
    squeeze: Vec<f64>,
    hidden_pre: Vec<f64>,
    excitation: Vec<f64>,
}

impl SeBlock {
    pub fn new(channels: usize, reduce_ratio: usize, rng: &mut Rng) -> Result<Self> {
        if reduce_ratio == 0 {
            return Err(invalid("reduce_ratio", "must be at least 1"));
        }
        if channels < reduce_ratio {
            return Err(invalid(
                "se_block",
                alloc::format!("{channels} channels is fewer than reduce ratio {reduce_ratio}"),
            ));
        }
        let bottleneck = channels / reduce_ratio;
        Ok(SeBlock {
            reduce_ratio,
            fc1: Dense::new(channels, bottleneck, rng),
            fc2: Dense::new(bottleneck, channels, rng),
        })
    }

    pub fn channels(&self) -> usize {
        self.fc1.input_dim()
    }

    pub fn excitation(&self, x: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.1.excitation)
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, SeCache)> {
        let c = self.channels();
        check_width("se_block", x, c)?;
        let t = x.rows();
        let mut squeeze = vec![0.0; c];
        for i in 0..t {
            for (s, v) in squeeze.iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        squeeze.iter_mut().for_each(|v| *v /= t as f64);
        let m = self.fc1.output_dim();
        let mut hidden_pre = self.fc1.b.data().to_vec();
        gemm_nt(&squeeze, self.fc1.w.data(), 1, c, m, &mut hidden_pre);
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| v.max(0.0)).collect();
        let mut excitation = self.fc2.b.data().to_vec();
        gemm_nt(&hidden, self.fc2.w.data(), 1, m, c, &mut excitation);
        excitation.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut out = x.clone();
        for i in 0..t {
            for (o, e) in out.row_mut(i).iter_mut().zip(&excitation) {
                *o *= e;
            }
        }
        Ok((
            out,
            SeCache {
                x: x.clone(),
                squeeze,
                hidden_pre,
                excitation,
            },
        ))
    }

    pub fn backward(&self, cache: &SeCache, grad: &Tensor, grads: &mut SeBlock) -> Result<Tensor> {
        let (c, m, t) = (self.channels(), self.fc1.output_dim(), cache.x.rows());
        check_width("se_block backward", grad, c)?;
        let mut dx = grad.clone();
        let mut de = vec![0.0; c];
        for i in 0..t {
            for j in 0..c {
                de[j] += grad.at(i, j) * cache.x.at(i, j);
                dx.row_mut(i)[j] *= cache.excitation[j];
            }
        }
        let dz2: Vec<f64> = de
            .iter()
            .zip(&cache.excitation)
            .map(|(d, e)| d * e * (1.0 - e))
            .collect();
        let hidden: Vec<f64> = cache.hidden_pre.iter().map(|&v| v.max(0.0)).collect();
        for j in 0..c {
            grads.fc2.b.data_mut()[j] += dz2[j];
            for k in 0..m {
                grads.fc2.w.data_mut()[j * m + k] += dz2[j] * hidden[k];
            }
        }
        let mut dh = vec![0.0; m];
        gemm_nn(&dz2, self.fc2.w.data(), 1, c, m, &mut dh);
        let dz1: Vec<f64> = dh
            .iter()
            .zip(&cache.hidden_pre)
            .map(|(g, &p)| if p > 0.0 { *g } else { 0.0 })
            .collect();
        for k in 0..m {
            grads.fc1.b.data_mut()[k] += dz1[k];
            for j in 0..c {
                grads.fc1.w.data_mut()[k * c + j] += dz1[k] * cache.squeeze[j];
            }
        }
        let mut ds = vec![0.0; c];
        gemm_nn(&dz1, self.fc1.w.data(), 1, m, c, &mut ds);
        for i in 0..t {
            for (o, s) in dx.row_mut(i).iter_mut().zip(&ds) {
                *o += s / t as f64;
            }
        }
        Ok(dx)
    }
}

impl Parameterized for SeBlock {
    fn params(&self) -> Vec<&Tensor> {
        let mut v = self.fc1.params();
        v.extend(self.fc2.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.fc1.params_mut();
        v.extend(self.fc2.params_mut());
        v
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, false, true, false]
    }
}
