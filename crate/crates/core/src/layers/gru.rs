use alloc::vec;
use alloc::vec::Vec;

use super::{check_width, Parameterized};
use crate::error::{Error, Result};
use crate::math::{sigmoid, tanh};
use crate::rng::Rng;
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, glorot_with, Tensor};

/// GRU with gates fused in the order update, reset, candidate:
/// `w: [3H, D]`, `u: [3H, H]`, `b: [3H]`.
///
/// The reset gate scales the previous state inside the candidate's recurrent
/// term: `h~ = tanh(W_h x + U_h (r * h_prev) + b_h)`, and
/// `h_t = (1 - z) * h_prev + z * h~`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gru {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub struct GruCache {
    x: Tensor,
    /// `z, r, h~` per step, `[T, 3H]`.
    gates: Vec<f64>,
    /// `h_0..h_T`, `[(T+1), H]`.
    hidden: Vec<f64>,
}

const UPDATE: usize = 0;
const RESET: usize = 1;
const CANDIDATE: usize = 2;

impl Gru {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut w = Vec::with_capacity(3 * hidden * input);
        let mut u = Vec::with_capacity(3 * hidden * hidden);
        for _ in 0..3 {
            w.extend(glorot_with(&[hidden, input], rng).into_data());
            u.extend(glorot_with(&[hidden, hidden], rng).into_data());
        }
        Gru {
            w: Tensor::new(&[3 * hidden, input], w).expect("shape"),
            u: Tensor::new(&[3 * hidden, hidden], u).expect("shape"),
            b: Tensor::zeros(&[3 * hidden]),
            hidden,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    fn step(&self, xz: &mut [f64], h_prev: &[f64], h_out: &mut [f64]) {
        let h = self.hidden;
        let u = self.u.data();
        // z and r use the plain previous state.
        gemm_nt(h_prev, &u[..2 * h * h], 1, h, 2 * h, &mut xz[..2 * h]);
        for j in 0..2 * h {
            xz[j] = sigmoid(xz[j]);
        }
        let rh: Vec<f64> = (0..h).map(|j| xz[RESET * h + j] * h_prev[j]).collect();
        gemm_nt(&rh, &u[2 * h * h..], 1, h, h, &mut xz[2 * h..]);
        for j in 0..h {
            let cand = tanh(xz[CANDIDATE * h + j]);
            xz[CANDIDATE * h + j] = cand;
            let z = xz[UPDATE * h + j];
            h_out[j] = (1.0 - z) * h_prev[j] + z * cand;
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, GruCache)> {
        check_width("gru", x, self.input_dim())?;
        let (steps, d, h) = (x.rows(), self.input_dim(), self.hidden);
        let h3 = 3 * h;
        let mut gates = Vec::with_capacity(steps * h3);
        for _ in 0..steps {
            gates.extend_from_slice(self.b.data());
        }
        gemm_nt(x.data(), self.w.data(), steps, d, h3, &mut gates);
        let mut hidden = vec![0.0; (steps + 1) * h];
        for t in 0..steps {
            let (prev, next) = hidden.split_at_mut((t + 1) * h);
            self.step(
                &mut gates[t * h3..(t + 1) * h3],
                &prev[t * h..],
                &mut next[..h],
            );
        }
        let out = Tensor::new(&[steps, h], hidden[h..].to_vec())?;
        Ok((
            out,
            GruCache {
                x: x.clone(),
                gates,
                hidden,
            },
        ))
    }

    pub fn backward(&self, cache: &GruCache, grad: &Tensor, grads: &mut Gru) -> Result<Tensor> {
        let (steps, d, h) = (cache.x.rows(), self.input_dim(), self.hidden);
        let h3 = 3 * h;
        if grad.rows() != steps || grad.cols() != h {
            return Err(Error::ShapeMismatch {
                op: "gru backward",
                left: grad.shape().to_vec(),
                right: vec![steps, h],
            });
        }
        let u = self.u.data();
        let mut dz_all = vec![0.0; steps * h3];
        let mut dh_next = vec![0.0; h];
        for t in (0..steps).rev() {
            let g = &cache.gates[t * h3..(t + 1) * h3];
            let h_prev = &cache.hidden[t * h..(t + 1) * h];
            let dh: Vec<f64> = (0..h)
                .map(|j| grad.data()[t * h + j] + dh_next[j])
                .collect();
            let dz = &mut dz_all[t * h3..(t + 1) * h3];
            let mut dh_prev = vec![0.0; h];
            for j in 0..h {
                let (z, cand) = (g[UPDATE * h + j], g[CANDIDATE * h + j]);
                dz[UPDATE * h + j] = dh[j] * (cand - h_prev[j]) * z * (1.0 - z);
                dz[CANDIDATE * h + j] = dh[j] * z * (1.0 - cand * cand);
                dh_prev[j] = dh[j] * (1.0 - z);
            }
            // Through U_h (r * h_prev).
            let mut drh = vec![0.0; h];
            gemm_nn(&dz[2 * h..], &u[2 * h * h..], 1, h, h, &mut drh);
            let rh: Vec<f64> = (0..h).map(|j| g[RESET * h + j] * h_prev[j]).collect();
            gemm_tn(
                &dz[2 * h..],
                &rh,
                1,
                h,
                h,
                &mut grads.u.data_mut()[2 * h * h..],
            );
            for j in 0..h {
                let r = g[RESET * h + j];
                dz[RESET * h + j] = drh[j] * h_prev[j] * r * (1.0 - r);
                dh_prev[j] += drh[j] * r;
            }
            // Through U_z, U_r acting on h_prev.
            gemm_nn(&dz[..2 * h], &u[..2 * h * h], 1, 2 * h, h, &mut dh_prev);
            gemm_tn(
                &dz[..2 * h],
                h_prev,
                1,
                2 * h,
                h,
                &mut grads.u.data_mut()[..2 * h * h],
            );
            dh_next = dh_prev;
        }
        gemm_tn(&dz_all, cache.x.data(), steps, h3, d, grads.w.data_mut());
        for t in 0..steps {
            for (gb, v) in grads
                .b
                .data_mut()
                .iter_mut()
                .zip(&dz_all[t * h3..(t + 1) * h3])
            {
                *gb += v;
            }
        }
        let mut dx = vec![0.0; steps * d];
        gemm_nn(&dz_all, self.w.data(), steps, h3, d, &mut dx);
        Tensor::new(&[steps, d], dx)
    }
}

impl Parameterized for Gru {
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

/// One GRU step on vectors.
pub fn gru_cell_step(p: &Gru, x_t: &Tensor, h_prev: &Tensor) -> Result<Tensor> {
    let h = p.hidden_size();
    if x_t.len() != p.input_dim() || h_prev.len() != h {
        return Err(Error::ShapeMismatch {
            op: "gru_cell_step",
            left: vec![x_t.len(), h_prev.len()],
            right: vec![p.input_dim(), h],
        });
    }
    let mut xz = p.b.data().to_vec();
    gemm_nt(x_t.data(), p.w.data(), 1, p.input_dim(), 3 * h, &mut xz);
    let mut out = vec![0.0; h];
    p.step(&mut xz, h_prev.data(), &mut out);
    Ok(Tensor::vector(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{testutil::grad_check_block, Block};

    fn zero(input: usize, hidden: usize) -> Gru {
        let mut g = Gru::new(input, hidden, &mut Rng::seed_from(0));
        g.zero_params();
        g
    }

    #[test]
    fn zero_params_halve_state() {
        let h_prev = Tensor::vector(vec![0.8, -0.4]);
        let h = gru_cell_step(&zero(3, 2), &Tensor::vector(vec![1.0, 2.0, 3.0]), &h_prev).unwrap();
        assert_eq!(h.data(), &[0.4, -0.2]);
    }

    #[test]
    fn zero_state_zero_params_stays_zero() {
        let h = gru_cell_step(
            &zero(3, 2),
            &Tensor::vector(vec![1.0, 2.0, 3.0]),
            &Tensor::zeros(&[2]),
        )
        .unwrap();
        assert_eq!(h.data(), &[0.0, 0.0]);
    }

    #[test]
    fn reset_gate_reaches_candidate() {
        // With only U_h nonzero the reset gate (0.5 at zero params) halves h_prev
        // before it enters the candidate.
        let mut g = zero(1, 1);
        g.u.data_mut()[2] = 1.0;
        let h = gru_cell_step(&g, &Tensor::vector(vec![0.0]), &Tensor::vector(vec![0.6])).unwrap();
        let expected = 0.5 * 0.6 + 0.5 * tanh(0.5 * 0.6);
        assert!((h.data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn sequence_matches_steps() {
        let mut rng = Rng::seed_from(5);
        let mut g = Gru::new(2, 3, &mut rng);
        g.b = glorot_with(&[9], &mut rng);
        let x = glorot_with(&[4, 2], &mut rng);
        let (seq, _) = g.forward(&x).unwrap();
        let mut h = Tensor::zeros(&[3]);
        for t in 0..4 {
            h = gru_cell_step(&g, &Tensor::vector(x.row(t).to_vec()), &h).unwrap();
            for j in 0..3 {
                assert!((seq.row(t)[j] - h.data()[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradient_check() {
        let mut rng = Rng::seed_from(5);
        let mut g = Gru::new(3, 4, &mut rng);
        g.b = glorot_with(&[12], &mut rng);
        let x = glorot_with(&[6, 3], &mut rng).scale(2.0);
        grad_check_block(&Block::Gru(g), &x, 5);
    }

    #[test]
    fn bounded_outputs() {
        let mut rng = Rng::seed_from(6);
        let g = Gru::new(2, 5, &mut rng);
        let (y, _) = g
            .forward(&glorot_with(&[30, 2], &mut rng).scale(100.0))
            .unwrap();
        assert!(y.data().iter().all(|v| v.abs() <= 1.0));
    }
}
