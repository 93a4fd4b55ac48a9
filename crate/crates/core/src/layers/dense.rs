use alloc::vec;
use alloc::vec::Vec;

use super::{check_width, Parameterized};
use crate::error::Result;
use crate::rng::Rng;
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, glorot_with, Tensor};

/// Affine map applied row by row: `y = x W^T + b`, with `W` shaped `[out, in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    x: Tensor,
}

impl Dense {
    pub fn new(input: usize, output: usize, rng: &mut Rng) -> Self {
        Dense {
            w: glorot_with(&[output, input], rng),
            b: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, DenseCache)> {
        check_width("dense", x, self.input_dim())?;
        let (rows, n_in, n_out) = (x.rows(), self.input_dim(), self.output_dim());
        let mut out = Vec::with_capacity(rows * n_out);
        for _ in 0..rows {
            out.extend_from_slice(self.b.data());
        }
        gemm_nt(x.data(), self.w.data(), rows, n_in, n_out, &mut out);
        Ok((
            Tensor::new(&[rows, n_out], out)?,
            DenseCache { x: x.clone() },
        ))
    }

    pub fn backward(&self, cache: &DenseCache, grad: &Tensor, grads: &mut Dense) -> Result<Tensor> {
        let (rows, n_in, n_out) = (cache.x.rows(), self.input_dim(), self.output_dim());
        check_width("dense backward", grad, n_out)?;
        gemm_tn(
            grad.data(),
            cache.x.data(),
            rows,
            n_out,
            n_in,
            grads.w.data_mut(),
        );
        for r in 0..rows {
            for (gb, g) in grads.b.data_mut().iter_mut().zip(grad.row(r)) {
                *gb += g;
            }
        }
        let mut dx = vec![0.0; rows * n_in];
        gemm_nn(grad.data(), self.w.data(), rows, n_out, n_in, &mut dx);
        Tensor::new(&[rows, n_in], dx)
    }
}

impl Parameterized for Dense {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, false]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{testutil::grad_check_block, Block};

    #[test]
    fn forward_hand_example() {
        let d = Dense {
            w: Tensor::matrix(1, 2, vec![2.0, -1.0]).unwrap(),
            b: Tensor::vector(vec![0.5]),
        };
        let x = Tensor::matrix(2, 2, vec![1.0, 1.0, 3.0, 4.0]).unwrap();
        let (y, _) = d.forward(&x).unwrap();
        assert_eq!(y.data(), &[1.5, 2.5]);
    }

    #[test]
    fn gradient_check() {
        let mut rng = Rng::seed_from(2);
        let mut d = Dense::new(5, 3, &mut rng);
        d.b = glorot_with(&[3], &mut rng);
        let x = glorot_with(&[4, 5], &mut rng);
        grad_check_block(&Block::Dense(d), &x, 2);
    }
}
