//! Dense complex LU with partial pivoting and a 1-norm condition estimate.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// `P A = L U`, stored packed: unit-lower `L` below the diagonal, `U` on and above.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    singular: bool,
}

pub fn norm1(a: &[Complex64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Lu {
    pub fn factor(a: &[Complex64], n: usize) -> Lu {
        assert_eq!(a.len(), n * n, "square matrix");
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i * n + k].norm().total_cmp(&lu[j * n + k].norm()))
                .expect("k < n");
            if lu[p * n + k].norm() == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= l * u;
                }
            }
        }
        Lu {
            n,
            lu,
            perm,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let d = l * x[j];
                x[i] -= d;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let d = u * x[j];
                x[i] -= d;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        // A^H = U^H L^H P, so solve U^H w = b, L^H v = w, x = P^T v.
        let mut w = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let u = self.lu[j * n + i].conj();
                let d = u * w[j];
                w[i] -= d;
            }
            w[i] /= self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let l = self.lu[j * n + i].conj();
                let d = l * w[j];
                w[i] -= d;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
        x
    }

    /// Lower-bound estimate of `||A^-1||_1` (Hager's method, a few solves).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        if self.singular {
            return f64::INFINITY;
        }
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        for k in 0..5 {
            let y = self.solve(&x);
            let new_est: f64 = y.iter().map(|v| v.norm()).sum();
            if k > 0 && new_est <= est {
                break;
            }
            est = new_est;
            let xi: Vec<Complex64> = y
                .iter()
                .map(|v| {
                    if v.norm() > 0.0 {
                        v / v.norm()
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let j = (0..n)
                .max_by(|&a, &b| z[a].norm().total_cmp(&z[b].norm()))
                .expect("n > 0");
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if z[j].norm() <= ztx {
                break;
            }
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        // Alternating-sign probe guards against the estimator's known blind spots.
        let alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
            })
            .collect();
        let alt_norm: f64 = alt.iter().map(|v| v.norm()).sum();
        let y = self.solve(&alt);
        est.max(y.iter().map(|v| v.norm()).sum::<f64>() / alt_norm)
    }
}

pub fn matvec(a: &[Complex64], x: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}
