use alloc::vec;
use alloc::vec::Vec;

use super::{check_width, Parameterized};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::tensor::{glorot_with, Tensor};

/// Hyperbolic linear unit: identity above zero, `alpha * x / (1 - x)` at or below.
#[inline]
pub fn hlu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x / (1.0 - x)
    }
}

/// Derivative of [`hlu`]; the lower branch is used at exactly zero.
#[inline]
pub fn hlu_grad(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        let d = 1.0 - x;
        alpha / (d * d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub n_filters: usize,
    pub kernel_width: usize,
    pub stride: usize,
    pub alpha: f64,
}

impl ConvSpec {
    pub fn new(in_channels: usize, n_filters: usize, kernel_width: usize) -> Self {
        ConvSpec {
            in_channels,
            n_filters,
            kernel_width,
            stride: 1,
            alpha: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0
            || self.n_filters == 0
            || self.kernel_width == 0
            || self.stride == 0
        {
            return Err(invalid(
                "conv spec",
                "channels, filters, kernel width and stride must be positive",
            ));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid("conv spec", "alpha must be positive"));
        }
        Ok(())
    }
}

/// Valid (unpadded) 1-D cross-correlation over the step axis followed by HLU.
///
/// Kernels are stored as `[filters, kernel_width * in_channels]`, so the
/// window `x[t*stride .. t*stride + width]` of a row-major `[T, C]` input is a
/// contiguous slice that dots directly against a kernel row.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d {
    pub spec: ConvSpec,
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Clone, Debug)]
pub struct ConvCache {
    x: Tensor,
    pre: Vec<f64>,
}

impl Conv1d {
    pub fn new(spec: ConvSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let w = glorot_with(&[spec.n_filters, spec.in_channels, spec.kernel_width], rng)
            .reshape(&[spec.n_filters, spec.kernel_width * spec.in_channels])?;
        Ok(Conv1d {
            spec,
            w,
            b: Tensor::zeros(&[spec.n_filters]),
        })
    }

    /// `floor((T - width) / stride) + 1` for `T >= width`.
    pub fn output_len(&self, steps: usize) -> Result<usize> {
        if steps < self.spec.kernel_width {
            return Err(Error::SequenceTooShort {
                len: steps,
                needed: self.spec.kernel_width,
            });
        }
        Ok((steps - self.spec.kernel_width) / self.spec.stride + 1)
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, ConvCache)> {
        check_width("conv1d", x, self.spec.in_channels)?;
        let out_len = self.output_len(x.rows())?;
        let ConvSpec {
            in_channels: c,
            n_filters: f,
            kernel_width: k,
            stride,
            alpha,
        } = self.spec;
        let span = k * c;
        let mut pre = vec![0.0; out_len * f];
        for t in 0..out_len {
            let window = &x.data()[t * stride * c..t * stride * c + span];
            for j in 0..f {
                let kern = &self.w.data()[j * span..(j + 1) * span];
                let mut s = self.b.data()[j];
                for (a, b) in window.iter().zip(kern) {
                    s += a * b;
                }
                pre[t * f + j] = s;
            }
        }
        let out = pre.iter().map(|&z| hlu(z, alpha)).collect();
        Ok((
            Tensor::new(&[out_len, f], out)?,
            ConvCache { x: x.clone(), pre },
        ))
    }

    pub fn backward(&self, cache: &ConvCache, grad: &Tensor, grads: &mut Conv1d) -> Result<Tensor> {
        let ConvSpec {
            in_channels: c,
            n_filters: f,
            kernel_width: k,
            stride,
            alpha,
        } = self.spec;
        let span = k * c;
        let out_len = cache.pre.len() / f;
        check_width("conv1d backward", grad, f)?;
        let mut dx = vec![0.0; cache.x.len()];
        for t in 0..out_len {
            let base = t * stride * c;
            for j in 0..f {
                let dz = grad.data()[t * f + j] * hlu_grad(cache.pre[t * f + j], alpha);
                if dz == 0.0 {
                    continue;
                }
                grads.b.data_mut()[j] += dz;
                let kern = &self.w.data()[j * span..(j + 1) * span];
                let gw = &mut grads.w.data_mut()[j * span..(j + 1) * span];
                let window = &cache.x.data()[base..base + span];
                for i in 0..span {
                    gw[i] += dz * window[i];
                    dx[base + i] += dz * kern[i];
                }
            }
        }
        Tensor::new(cache.x.shape(), dx)
    }
}

impl Parameterized for Conv1d {
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
    use proptest::prelude::{prop_assert_eq, prop_assume, proptest};

    fn fixed(kernel: &[f64], alpha: f64) -> Conv1d {
        let mut spec = ConvSpec::new(1, 1, kernel.len());
        spec.alpha = alpha;
        Conv1d {
            spec,
            w: Tensor::matrix(1, kernel.len(), kernel.to_vec()).unwrap(),
            b: Tensor::zeros(&[1]),
        }
    }

    fn column(v: &[f64]) -> Tensor {
        Tensor::matrix(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn hlu_examples() {
        assert_eq!(hlu(0.0, 0.1), 0.0);
        assert_eq!(hlu(0.0, 3.0), 0.0);
        assert_eq!(hlu(5.0, 0.1), 5.0);
        assert!((hlu(-1.0, 0.1) - (-0.05)).abs() < 1e-15);
    }

    #[test]
    fn hlu_is_monotone() {
        let mut prev = hlu(-50.0, 0.1);
        for i in -499..500 {
            let v = hlu(i as f64 * 0.1, 0.1);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn difference_kernel_example() {
        let conv = fixed(&[1.0, 0.0, -1.0], 0.1);
        let (y, _) = conv.forward(&column(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(y.shape(), &[2, 1]);
        let expected = 0.1 * -2.0 / 3.0;
        for v in y.data() {
            assert!((v - expected).abs() < 1e-15);
            assert!((v - (-0.0667)).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let (y, _) = fixed(&[0.0, 0.0], 0.1)
            .forward(&column(&[1.0, -2.0, 3.0]))
            .unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_on_positive_input() {
        let x = column(&[0.5, 1.0, 7.0]);
        let (y, _) = fixed(&[1.0], 0.1).forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn too_short_sequence_errors() {
        let err = fixed(&[1.0, 1.0, 1.0], 0.1)
            .forward(&column(&[1.0, 2.0]))
            .unwrap_err();
        assert_eq!(err, Error::SequenceTooShort { len: 2, needed: 3 });
    }

    #[test]
    fn invalid_alpha_rejected() {
        let mut spec = ConvSpec::new(1, 1, 1);
        spec.alpha = 0.0;
        assert!(Conv1d::new(spec, &mut Rng::seed_from(0)).is_err());
    }

    #[test]
    fn gradient_check_multichannel_strided() {
        let mut rng = Rng::seed_from(12);
        let mut spec = ConvSpec::new(3, 4, 3);
        spec.stride = 2;
        let mut conv = Conv1d::new(spec, &mut rng).unwrap();
        conv.b = glorot_with(&[4], &mut rng);
        let x = glorot_with(&[9, 3], &mut rng).scale(2.0);
        grad_check_block(&Block::Conv(conv), &x, 12);
    }

    proptest! {
        #[test]
        fn output_length_formula(t in 1usize..40, k in 1usize..10, s in 1usize..5) {
            prop_assume!(t >= k);
            let mut spec = ConvSpec::new(2, 3, k);
            spec.stride = s;
            let conv = Conv1d::new(spec, &mut Rng::seed_from(1)).unwrap();
            let (y, _) = conv.forward(&Tensor::filled(&[t, 2], 0.3)).unwrap();
            prop_assert_eq!(y.rows(), (t - k) / s + 1);
        }
    }
}
