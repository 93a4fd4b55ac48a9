use alloc::vec;
use alloc::vec::Vec;

use super::{check_width, Parameterized};
use crate::error::{Error, Result};
use crate::math::{sigmoid, tanh};
use crate::rng::Rng;
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, glorot_with, Tensor};

/// LSTM parameters with the four gates fused along the first axis in the
/// order forget, input, candidate, output:
/// `w: [4H, D]`, `u: [4H, H]`, `b: [4H]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lstm {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    x: Tensor,
    /// Post-activation gates per step, `[T, 4H]`.
    gates: Vec<f64>,
    /// Cell states `c_0..c_T` (the first row is the zero initial state), `[(T+1), H]`.
    cells: Vec<f64>,
    /// Hidden states `h_0..h_T`, `[(T+1), H]`.
    hidden: Vec<f64>,
}

const FORGET: usize = 0;
const INPUT: usize = 1;
const CANDIDATE: usize = 2;
const OUTPUT: usize = 3;

impl Lstm {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut w = Vec::with_capacity(4 * hidden * input);
        let mut u = Vec::with_capacity(4 * hidden * hidden);
        for _ in 0..4 {
            w.extend(glorot_with(&[hidden, input], rng).into_data());
            u.extend(glorot_with(&[hidden, hidden], rng).into_data());
        }
        Lstm {
            w: Tensor::new(&[4 * hidden, input], w).expect("shape"),
            u: Tensor::new(&[4 * hidden, hidden], u).expect("shape"),
            b: Tensor::zeros(&[4 * hidden]),
            hidden,
        }
    }

    pub fn from_parts(w: Tensor, u: Tensor, b: Tensor) -> Result<Self> {
        let hidden = u.cols();
        let ok = w.rank() == 2
            && u.rank() == 2
            && w.rows() == 4 * hidden
            && u.rows() == 4 * hidden
            && b.len() == 4 * hidden;
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "lstm params",
                left: w.shape().to_vec(),
                right: u.shape().to_vec(),
            });
        }
        Ok(Lstm { w, u, b, hidden })
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    /// Weights of one gate: `(W_g, U_g, b_g)` as row slices of the fused tensors.
    pub fn gate(&self, g: usize) -> (&[f64], &[f64], &[f64]) {
        let (h, d) = (self.hidden, self.input_dim());
        (
            &self.w.data()[g * h * d..(g + 1) * h * d],
            &self.u.data()[g * h * h..(g + 1) * h * h],
            &self.b.data()[g * h..(g + 1) * h],
        )
    }

    /// Runs the cell over every row of `x: [T, D]`, returning all hidden states `[T, H]`.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, LstmCache)> {
        check_width("lstm", x, self.input_dim())?;
        let (steps, d, h) = (x.rows(), self.input_dim(), self.hidden);
        let h4 = 4 * h;
        // Input projections for all steps at once.
        let mut gates = Vec::with_capacity(steps * h4);
        for _ in 0..steps {
            gates.extend_from_slice(self.b.data());
        }
        gemm_nt(x.data(), self.w.data(), steps, d, h4, &mut gates);

        let mut cells = vec![0.0; (steps + 1) * h];
        let mut hidden = vec![0.0; (steps + 1) * h];
        for t in 0..steps {
            let z = &mut gates[t * h4..(t + 1) * h4];
            gemm_nt(&hidden[t * h..(t + 1) * h], self.u.data(), 1, h, h4, z);
            for j in 0..h {
                z[FORGET * h + j] = sigmoid(z[FORGET * h + j]);
                z[INPUT * h + j] = sigmoid(z[INPUT * h + j]);
                z[CANDIDATE * h + j] = tanh(z[CANDIDATE * h + j]);
                z[OUTPUT * h + j] = sigmoid(z[OUTPUT * h + j]);
                let c =
                    z[FORGET * h + j] * cells[t * h + j] + z[INPUT * h + j] * z[CANDIDATE * h + j];
                cells[(t + 1) * h + j] = c;
                hidden[(t + 1) * h + j] = z[OUTPUT * h + j] * tanh(c);
            }
        }
        let out = Tensor::new(&[steps, h], hidden[h..].to_vec())?;
        Ok((
            out,
            LstmCache {
                x: x.clone(),
                gates,
                cells,
                hidden,
            },
        ))
    }

    /// Backpropagation through time over the whole sequence.
    pub fn backward(&self, cache: &LstmCache, grad: &Tensor, grads: &mut Lstm) -> Result<Tensor> {
        let (steps, d, h) = (cache.x.rows(), self.input_dim(), self.hidden);
        let h4 = 4 * h;
        if grad.rows() != steps || grad.cols() != h {
            return Err(Error::ShapeMismatch {
                op: "lstm backward",
                left: grad.shape().to_vec(),
                right: vec![steps, h],
            });
        }
        let mut dz_all = vec![0.0; steps * h4];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for t in (0..steps).rev() {
            let g = &cache.gates[t * h4..(t + 1) * h4];
            let c_prev = &cache.cells[t * h..(t + 1) * h];
            let c = &cache.cells[(t + 1) * h..(t + 2) * h];
            let dz = &mut dz_all[t * h4..(t + 1) * h4];
            for j in 0..h {
                let (f, i, cand, o) = (
                    g[FORGET * h + j],
                    g[INPUT * h + j],
                    g[CANDIDATE * h + j],
                    g[OUTPUT * h + j],
                );
                let tc = tanh(c[j]);
                let dh = grad.data()[t * h + j] + dh_next[j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                dz[FORGET * h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[INPUT * h + j] = dc * cand * i * (1.0 - i);
                dz[CANDIDATE * h + j] = dc * i * (1.0 - cand * cand);
                dz[OUTPUT * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            gemm_nn(dz, self.u.data(), 1, h4, h, &mut dh_next);
        }
        gemm_tn(&dz_all, cache.x.data(), steps, h4, d, grads.w.data_mut());
        gemm_tn(
            &dz_all,
            &cache.hidden[..steps * h],
            steps,
            h4,
            h,
            grads.u.data_mut(),
        );
        for t in 0..steps {
            for (gb, v) in grads
                .b
                .data_mut()
                .iter_mut()
                .zip(&dz_all[t * h4..(t + 1) * h4])
            {
                *gb += v;
            }
        }
        let mut dx = vec![0.0; steps * d];
        gemm_nn(&dz_all, self.w.data(), steps, h4, d, &mut dx);
        Tensor::new(&[steps, d], dx)
    }
}

impl Parameterized for Lstm {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.u, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.u, &mut self.b]
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, true, false]
    }
}

/// One LSTM step on vectors: returns `(h_t, c_t)`.
pub fn lstm_cell_step(
    p: &Lstm,
    x_t: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let h = p.hidden_size();
    if x_t.len() != p.input_dim() || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::ShapeMismatch {
            op: "lstm_cell_step",
            left: vec![x_t.len(), h_prev.len(), c_prev.len()],
            right: vec![p.input_dim(), h, h],
        });
    }
    let pre = |g: usize| -> Vec<f64> {
        let (w, u, b) = p.gate(g);
        let mut z = b.to_vec();
        gemm_nt(x_t.data(), w, 1, p.input_dim(), h, &mut z);
        gemm_nt(h_prev.data(), u, 1, h, h, &mut z);
        z
    };
    let f: Vec<f64> = pre(FORGET).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = pre(INPUT).into_iter().map(sigmoid).collect();
    let cand: Vec<f64> = pre(CANDIDATE).into_iter().map(tanh).collect();
    let o: Vec<f64> = pre(OUTPUT).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..h)
        .map(|j| f[j] * c_prev.data()[j] + i[j] * cand[j])
        .collect();
    let h_t: Vec<f64> = (0..h).map(|j| o[j] * tanh(c[j])).collect();
    Ok((Tensor::vector(h_t), Tensor::vector(c)))
}
