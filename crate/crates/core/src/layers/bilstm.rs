use alloc::vec::Vec;

use super::{Lstm, LstmCache, Parameterized};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Bidirectional LSTM. Step `t` of the output is `[h_fwd(t), h_bwd(t)]`,
/// where the backward direction reads the sequence from the last step down.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

fn reverse_rows(x: &Tensor) -> Tensor {
    let mut data = Vec::with_capacity(x.len());
    for t in (0..x.rows()).rev() {
        data.extend_from_slice(x.row(t));
    }
    Tensor::new(&[x.rows(), x.cols()], data).expect("same shape")
}

impl BiLstm {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        BiLstm {
            fwd: Lstm::new(input, hidden, rng),
            bwd: Lstm::new(input, hidden, rng),
        }
    }

    pub fn from_directions(fwd: Lstm, bwd: Lstm) -> Result<Self> {
        if fwd.input_dim() != bwd.input_dim() || fwd.hidden_size() != bwd.hidden_size() {
            return Err(Error::ShapeMismatch {
                op: "bilstm",
                left: fwd.w.shape().to_vec(),
                right: bwd.w.shape().to_vec(),
            });
        }
        Ok(BiLstm { fwd, bwd })
    }

    pub fn input_dim(&self) -> usize {
        self.fwd.input_dim()
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size()
    }

    /// Twice the per-direction hidden size.
    pub fn output_dim(&self) -> usize {
        2 * self.fwd.hidden_size()
    }

    pub fn forward(&self, seq: &Tensor) -> Result<(Tensor, BiLstmCache)> {
        let (yf, cf) = self.fwd.forward(seq)?;
        let (yb_rev, cb) = self.bwd.forward(&reverse_rows(seq))?;
        let yb = reverse_rows(&yb_rev);
        let out = Tensor::hstack(&[&yf, &yb])?;
        Ok((out, BiLstmCache { fwd: cf, bwd: cb }))
    }

    pub fn backward(
        &self,
        cache: &BiLstmCache,
        grad: &Tensor,
        grads: &mut BiLstm,
    ) -> Result<Tensor> {
        let h = self.hidden_size();
        let gf = grad.column_block(0, h);
        let gb = reverse_rows(&grad.column_block(h, h));
        let dxf = self.fwd.backward(&cache.fwd, &gf, &mut grads.fwd)?;
        let dxb = reverse_rows(&self.bwd.backward(&cache.bwd, &gb, &mut grads.bwd)?);
        let mut dx = dxf;
        dx.add_assign(&dxb)?;
        Ok(dx)
    }
}

impl Parameterized for BiLstm {
    fn params(&self) -> Vec<&Tensor> {
        let mut v = self.fwd.params();
        v.extend(self.bwd.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.fwd.params_mut();
        v.extend(self.bwd.params_mut());
        v
    }

    fn decay_mask(&self) -> Vec<bool> {
        let mut v = self.fwd.decay_mask();
        v.extend(self.bwd.decay_mask());
        v
    }
}
