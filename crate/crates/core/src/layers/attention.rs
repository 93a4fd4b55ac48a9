use alloc::vec;
use alloc::vec::Vec;

use super::{check_width, Parameterized};
use crate::error::{Error, Result};
use crate::math::tanh;
use crate::rng::Rng;
use crate::tensor::{
    gemm_nn, gemm_nt, gemm_tn, glorot_with, softmax_rows, softmax_rows_backward, Tensor,
};

/// Additive self-attention over a sequence `O: [T, D]`:
///
/// ```text
/// F = tanh(S_k O^T)        [AT, T]
/// A = softmax_rows(S_a F)  [R, T]
/// out = A O                [R, D]
/// ```
///
/// `S_k: [AT, D]` scores each step, `S_a: [R, AT]` mixes the scores into `R`
/// attention rows ("hops"). Each row of `A` is a distribution over steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAttention {
    pub s_k: Tensor,
    pub s_a: Tensor,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    o: Tensor,
    f: Vec<f64>,
    a: Tensor,
}

impl SelfAttention {
    pub fn new(model_dim: usize, attention_dim: usize, hops: usize, rng: &mut Rng) -> Self {
        SelfAttention {
            s_k: glorot_with(&[attention_dim, model_dim], rng),
            s_a: glorot_with(&[hops, attention_dim], rng),
        }
    }

    pub fn model_dim(&self) -> usize {
        self.s_k.cols()
    }

    pub fn attention_dim(&self) -> usize {
        self.s_k.rows()
    }

    pub fn hops(&self) -> usize {
        self.s_a.rows()
    }

    /// Attention weights `A` for a sequence, without the weighted sum.
    pub fn weights(&self, o: &Tensor) -> Result<Tensor> {
        Ok(self.forward(o)?.1.a)
    }

    pub fn forward(&self, o: &Tensor) -> Result<(Tensor, AttentionCache)> {
        check_width("self_attention", o, self.model_dim())?;
        if self.s_a.cols() != self.attention_dim() {
            return Err(Error::ShapeMismatch {
                op: "self_attention",
                left: self.s_a.shape().to_vec(),
                right: self.s_k.shape().to_vec(),
            });
        }
        let (t, d, at, r) = (
            o.rows(),
            self.model_dim(),
            self.attention_dim(),
            self.hops(),
        );
        let mut f = vec![0.0; at * t];
        gemm_nt(self.s_k.data(), o.data(), at, d, t, &mut f);
        f.iter_mut().for_each(|v| *v = tanh(*v));
        let mut z = vec![0.0; r * t];
        gemm_nn(self.s_a.data(), &f, r, at, t, &mut z);
        let a = softmax_rows(&Tensor::new(&[r, t], z)?);
        let mut out = vec![0.0; r * d];
        gemm_nn(a.data(), o.data(), r, t, d, &mut out);
        Ok((
            Tensor::new(&[r, d], out)?,
            AttentionCache { o: o.clone(), f, a },
        ))
    }

    pub fn backward(
        &self,
        cache: &AttentionCache,
        grad: &Tensor,
        grads: &mut SelfAttention,
    ) -> Result<Tensor> {
        let (t, d, at, r) = (
            cache.o.rows(),
            self.model_dim(),
            self.attention_dim(),
            self.hops(),
        );
        check_width("self_attention backward", grad, d)?;
        // out = A O
        let mut da = vec![0.0; r * t];
        gemm_nt(grad.data(), cache.o.data(), r, d, t, &mut da);
        let mut d_o = vec![0.0; t * d];
        gemm_tn(cache.a.data(), grad.data(), r, t, d, &mut d_o);
        // A = softmax(Z), Z = S_a F
        let dz = softmax_rows_backward(&cache.a, &Tensor::new(&[r, t], da)?);
        gemm_nt(dz.data(), &cache.f, r, t, at, grads.s_a.data_mut());
        let mut df = vec![0.0; at * t];
        gemm_tn(self.s_a.data(), dz.data(), r, at, t, &mut df);
        // F = tanh(P), P = S_k O^T
        for (g, fv) in df.iter_mut().zip(&cache.f) {
            *g *= 1.0 - fv * fv;
        }
        gemm_nn(&df, cache.o.data(), at, t, d, grads.s_k.data_mut());
        gemm_tn(&df, self.s_k.data(), at, t, d, &mut d_o);
        Tensor::new(&[t, d], d_o)
    }
}

impl Parameterized for SelfAttention {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.s_k, &self.s_a]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.s_k, &mut self.s_a]
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, true]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{testutil::grad_check_block, Block};

    #[test]
    fn single_step_passes_through() {
        let mut rng = Rng::seed_from(1);
        let att = SelfAttention::new(4, 3, 1, &mut rng);
        let o = glorot_with(&[1, 4], &mut rng);
        let (y, cache) = att.forward(&o).unwrap();
        assert_eq!(cache.a.data(), &[1.0]);
        assert_eq!(y, o);
    }

    #[test]
    fn zero_mixing_gives_uniform_average() {
        let mut rng = Rng::seed_from(2);
        let mut att = SelfAttention::new(3, 5, 2, &mut rng);
        att.s_a = Tensor::zeros(&[2, 5]);
        let o = glorot_with(&[4, 3], &mut rng);
        let (y, cache) = att.forward(&o).unwrap();
        assert!(cache.a.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        for r in 0..2 {
            for j in 0..3 {
                let col_mean = (0..4).map(|t| o.at(t, j)).sum::<f64>() / 4.0;
                assert!((y.at(r, j) - col_mean).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rows_are_distributions() {
        let mut rng = Rng::seed_from(3);
        let att = SelfAttention::new(6, 4, 3, &mut rng);
        let a = att
            .weights(&glorot_with(&[9, 6], &mut rng).scale(50.0))
            .unwrap();
        for i in 0..3 {
            assert!(a.row(i).iter().all(|&v| v >= 0.0));
            assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let att = SelfAttention::new(6, 4, 1, &mut Rng::seed_from(3));
        assert!(att.forward(&Tensor::zeros(&[3, 5])).is_err());
    }

    #[test]
    fn gradient_check() {
        let mut rng = Rng::seed_from(11);
        let att = SelfAttention::new(4, 3, 2, &mut rng);
        let o = glorot_with(&[5, 4], &mut rng).scale(2.0);
        grad_check_block(&Block::Attention(att), &o, 11);
    }
}
