//! Layer family with explicit forward and backward passes.
//!
//! Every layer consumes and produces rank-2 tensors shaped `[steps, features]`.
//! `forward` returns the output together with a cache; `backward` takes that
//! cache and the upstream gradient, accumulates parameter gradients into a
//! gradient buffer of the same type as the layer, and returns the gradient
//! with respect to the input.

mod attention;
mod bilstm;
mod conv;
mod dense;
mod dropout;
mod gru;
mod lstm;
mod se;

pub use attention::{AttentionCache, SelfAttention};
pub use bilstm::{BiLstm, BiLstmCache};
pub use conv::{hlu, hlu_grad, Conv1d, ConvCache, ConvSpec};
pub use dense::{Dense, DenseCache};
pub use dropout::{dropout, Dropout, DropoutCache, Mode};
pub use gru::{gru_cell_step, Gru, GruCache};
pub use lstm::{lstm_cell_step, Lstm, LstmCache};
pub use se::{SeBlock, SeCache};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gradcheck::{check_gradient, GradCheckConfig, GradCheckFailure, GradCheckReport};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Uniform access to a layer's trainable tensors.
pub trait Parameterized {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
    /// One flag per tensor in `params()`: true for weights subject to L2
    /// regularisation, false for biases.
    fn decay_mask(&self) -> Vec<bool>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for t in self.params() {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Overwrites all parameters from a flat slice in `params()` order.
    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        let need = self.param_count();
        if flat.len() != need {
            return Err(Error::LengthMismatch {
                left: flat.len(),
                right: need,
            });
        }
        let mut off = 0;
        for t in self.params_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    fn zero_params(&mut self) {
        for t in self.params_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// A gradient buffer shaped like `layer`, filled with zeros.
pub fn zero_grads<L: Parameterized + Clone>(layer: &L) -> L {
    let mut g = layer.clone();
    g.zero_params();
    g
}

pub(crate) fn check_width(op: &'static str, x: &Tensor, width: usize) -> Result<()> {
    if x.rank() != 2 || x.cols() != width {
        return Err(Error::ShapeMismatch {
            op,
            left: x.shape().to_vec(),
            right: alloc::vec![x.rows(), width],
        });
    }
    Ok(())
}

/// Pools `[steps, features]` to `[1, features]` by averaging over steps.
pub fn mean_pool(x: &Tensor) -> Tensor {
    let (t, d) = (x.rows(), x.cols());
    let mut out = alloc::vec![0.0; d];
    for i in 0..t {
        for (o, v) in out.iter_mut().zip(x.row(i)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= t as f64);
    Tensor::new(&[1, d], out).expect("non-empty pool")
}

fn mean_pool_backward(steps: usize, grad: &Tensor) -> Tensor {
    let d = grad.cols();
    let mut out = Vec::with_capacity(steps * d);
    for _ in 0..steps {
        out.extend(grad.data().iter().map(|g| g / steps as f64));
    }
    Tensor::new(&[steps, d], out).expect("non-empty pool")
}

/// One stage of a sequential network.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Conv(Conv1d),
    Se(SeBlock),
    Dropout(Dropout),
    Lstm(Lstm),
    Gru(Gru),
    BiLstm(BiLstm),
    Attention(SelfAttention),
    /// Average over the step axis: `[T, D] -> [1, D]`.
    MeanPool,
    /// Row-major flatten: `[R, D] -> [1, R * D]`.
    Flatten,
    Dense(Dense),
}

#[derive(Clone, Debug)]
pub enum BlockCache {
    Conv(ConvCache),
    Se(SeCache),
    Dropout(DropoutCache),
    Lstm(LstmCache),
    Gru(GruCache),
    BiLstm(BiLstmCache),
    Attention(AttentionCache),
    MeanPool { steps: usize },
    Flatten { shape: [usize; 2] },
    Dense(DenseCache),
}

impl Block {
    pub fn name(&self) -> &'static str {
        match self {
            Block::Conv(_) => "conv1d",
            Block::Se(_) => "se_block",
            Block::Dropout(_) => "dropout",
            Block::Lstm(_) => "lstm",
            Block::Gru(_) => "gru",
            Block::BiLstm(_) => "bilstm",
            Block::Attention(_) => "self_attention",
            Block::MeanPool => "mean_pool",
            Block::Flatten => "flatten",
            Block::Dense(_) => "dense",
        }
    }

    /// Output shape for an input of shape `[steps, width]`.
    pub fn output_shape(&self, steps: usize, width: usize) -> Result<(usize, usize)> {
        let expect = |need: usize| {
            if width == need {
                Ok(())
            } else {
                Err(Error::ShapeMismatch {
                    op: "stack_layers",
                    left: alloc::vec![steps, width],
                    right: alloc::vec![steps, need],
                })
            }
        };
        match self {
            Block::Conv(c) => {
                expect(c.spec.in_channels)?;
                Ok((c.output_len(steps)?, c.spec.n_filters))
            }
            Block::Se(s) => {
                expect(s.channels())?;
                Ok((steps, width))
            }
            Block::Dropout(_) => Ok((steps, width)),
            Block::Lstm(l) => {
                expect(l.input_dim())?;
                Ok((steps, l.hidden_size()))
            }
            Block::Gru(g) => {
                expect(g.input_dim())?;
                Ok((steps, g.hidden_size()))
            }
            Block::BiLstm(b) => {
                expect(b.input_dim())?;
                Ok((steps, b.output_dim()))
            }
            Block::Attention(a) => {
                expect(a.model_dim())?;
                Ok((a.hops(), width))
            }
            Block::MeanPool => Ok((1, width)),
            Block::Flatten => Ok((1, steps * width)),
            Block::Dense(d) => {
                expect(d.input_dim())?;
                Ok((steps, d.output_dim()))
            }
        }
    }

    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<(Tensor, BlockCache)> {
        Ok(match self {
            Block::Conv(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::Conv(c))
            }
            Block::Se(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::Se(c))
            }
            Block::Dropout(l) => {
                let (y, c) = l.forward(x, mode, rng);
                (y, BlockCache::Dropout(c))
            }
            Block::Lstm(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::Lstm(c))
            }
            Block::Gru(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::Gru(c))
            }
            Block::BiLstm(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::BiLstm(c))
            }
            Block::Attention(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::Attention(c))
            }
            Block::MeanPool => (mean_pool(x), BlockCache::MeanPool { steps: x.rows() }),
            Block::Flatten => {
                let shape = [x.rows(), x.cols()];
                let y = x.clone().reshape(&[1, x.len()])?;
                (y, BlockCache::Flatten { shape })
            }
            Block::Dense(l) => {
                let (y, c) = l.forward(x)?;
                (y, BlockCache::Dense(c))
            }
        })
    }

    /// Backward pass. `grads` must be a gradient buffer of the same variant.
    pub fn backward(&self, cache: &BlockCache, grad: &Tensor, grads: &mut Block) -> Result<Tensor> {
        match (self, cache, grads) {
            (Block::Conv(l), BlockCache::Conv(c), Block::Conv(g)) => l.backward(c, grad, g),
            (Block::Se(l), BlockCache::Se(c), Block::Se(g)) => l.backward(c, grad, g),
            (Block::Dropout(_), BlockCache::Dropout(c), Block::Dropout(_)) => Ok(c.backward(grad)),
            (Block::Lstm(l), BlockCache::Lstm(c), Block::Lstm(g)) => l.backward(c, grad, g),
            (Block::Gru(l), BlockCache::Gru(c), Block::Gru(g)) => l.backward(c, grad, g),
            (Block::BiLstm(l), BlockCache::BiLstm(c), Block::BiLstm(g)) => l.backward(c, grad, g),
            (Block::Attention(l), BlockCache::Attention(c), Block::Attention(g)) => {
                l.backward(c, grad, g)
            }
            (Block::MeanPool, BlockCache::MeanPool { steps }, Block::MeanPool) => {
                Ok(mean_pool_backward(*steps, grad))
            }
            (Block::Flatten, BlockCache::Flatten { shape }, Block::Flatten) => {
                grad.clone().reshape(shape)
            }
            (Block::Dense(l), BlockCache::Dense(c), Block::Dense(g)) => l.backward(c, grad, g),
            _ => Err(Error::InvalidParameter {
                name: "block",
                reason: alloc::format!(
                    "cache/gradient buffer do not match a {} block",
                    self.name()
                ),
            }),
        }
    }
}

impl Parameterized for Block {
    fn params(&self) -> Vec<&Tensor> {
        match self {
            Block::Conv(l) => l.params(),
            Block::Se(l) => l.params(),
            Block::Lstm(l) => l.params(),
            Block::Gru(l) => l.params(),
            Block::BiLstm(l) => l.params(),
            Block::Attention(l) => l.params(),
            Block::Dense(l) => l.params(),
            Block::Dropout(_) | Block::MeanPool | Block::Flatten => Vec::new(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Block::Conv(l) => l.params_mut(),
            Block::Se(l) => l.params_mut(),
            Block::Lstm(l) => l.params_mut(),
            Block::Gru(l) => l.params_mut(),
            Block::BiLstm(l) => l.params_mut(),
            Block::Attention(l) => l.params_mut(),
            Block::Dense(l) => l.params_mut(),
            Block::Dropout(_) | Block::MeanPool | Block::Flatten => Vec::new(),
        }
    }

    fn decay_mask(&self) -> Vec<bool> {
        match self {
            Block::Conv(l) => l.decay_mask(),
            Block::Se(l) => l.decay_mask(),
            Block::Lstm(l) => l.decay_mask(),
            Block::Gru(l) => l.decay_mask(),
            Block::BiLstm(l) => l.decay_mask(),
            Block::Attention(l) => l.decay_mask(),
            Block::Dense(l) => l.decay_mask(),
            Block::Dropout(_) | Block::MeanPool | Block::Flatten => Vec::new(),
        }
    }
}

/// Runs `seq` through `layers` in order, feeding each output to the next.
pub fn stack_layers(layers: &[Block], seq: &Tensor) -> Result<Tensor> {
    let (mut steps, mut width) = (seq.rows(), seq.cols());
    for l in layers {
        (steps, width) = l.output_shape(steps, width)?;
    }
    let mut rng = Rng::seed_from(0);
    let mut h = seq.clone();
    for l in layers {
        h = l.forward(&h, Mode::Eval, &mut rng)?.0;
    }
    Ok(h)
}

/// Finite-difference check of a block's parameter and input gradients at 20
/// random coordinates, with loss `sum(output * R)` for a fixed random `R`.
pub fn check_block_gradients(
    block: &Block,
    x: &Tensor,
    seed: u64,
) -> core::result::Result<GradCheckReport, GradCheckFailure> {
    let mut rng = Rng::seed_from(seed);
    let (y, cache) = block
        .forward(x, Mode::Eval, &mut rng)
        .expect("forward on a valid input");
    let proj = crate::tensor::glorot_with(y.shape(), &mut rng).scale(3.0);
    let mut grads = block.clone();
    grads.zero_params();
    let dx = block
        .backward(&cache, &proj, &mut grads)
        .expect("backward on a fresh cache");

    let n_params = block.param_count();
    let mut point = block.flat_params();
    point.extend_from_slice(x.data());
    let mut analytic = grads.flat_params();
    analytic.extend_from_slice(dx.data());

    let loss = |v: &[f64]| {
        let mut b = block.clone();
        b.load_flat(&v[..n_params]).expect("same parameter count");
        let xin = Tensor::new(x.shape(), v[n_params..].to_vec()).expect("same shape");
        let (y, _) = b
            .forward(&xin, Mode::Eval, &mut Rng::seed_from(0))
            .expect("forward");
        y.data()
            .iter()
            .zip(proj.data())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    check_gradient(
        &GradCheckConfig::default(),
        &point,
        &analytic,
        20,
        seed,
        loss,
    )
}
