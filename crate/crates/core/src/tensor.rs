//! Dense row-major `f64` tensors.
//!
//! Tensors are plain values: every operation returns a new tensor and the
//! backward companions (`*_backward`) map an upstream gradient onto the
//! operands. There is no broadcasting; binary operations demand equal shapes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `shape` accounts for every value.
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) || expected != data.len() {
            return Err(Error::ShapeMismatch {
                op: "tensor",
                left: shape.to_vec(),
                right: vec![data.len()],
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(&[rows, cols], data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn zeros_like(&self) -> Self {
        Tensor::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Rows of a rank-2 tensor (1 for a vector).
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            1 => 1,
            _ => self.shape[0],
        }
    }

    /// Columns of a rank-2 tensor (the length of a vector).
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: self.shape,
                right: shape.to_vec(),
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Tensor {
            shape: vec![c, r],
            data: out,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    /// `self += other`, shapes must match.
    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        same_shape("add_assign", self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Concatenates rank-2 tensors with equal row counts along columns.
    pub fn hstack(parts: &[&Tensor]) -> Result<Self> {
        let rows = parts.first().map(|t| t.rows()).unwrap_or(0);
        if let Some(bad) = parts.iter().find(|t| t.rows() != rows) {
            return Err(Error::ShapeMismatch {
                op: "hstack",
                left: parts[0].shape.clone(),
                right: bad.shape.clone(),
            });
        }
        let cols: usize = parts.iter().map(|t| t.cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Tensor::new(&[rows, cols], data)
    }

    /// Splits columns `[start, start+width)` out of a rank-2 tensor.
    pub fn column_block(&self, start: usize, width: usize) -> Self {
        let rows = self.rows();
        let mut data = Vec::with_capacity(rows * width);
        for i in 0..rows {
            data.extend_from_slice(&self.row(i)[start..start + width]);
        }
        Tensor {
            shape: vec![rows, width],
            data,
        }
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch {
            op,
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    Ok(())
}

fn as_matrix(t: &Tensor) -> (usize, usize) {
    match t.rank() {
        1 => (1, t.shape[0]),
        _ => (t.shape[0], t.data.len() / t.shape[0]),
    }
}

/// `out[m,n] += a[m,k] * b[k,n]`, raw row-major slices.
pub fn gemm_nn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

/// `out[m,n] += a[m,k] * b[n,k]^T`.
pub fn gemm_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = 0.0;
            for (x, y) in arow.iter().zip(brow) {
                s += x * y;
            }
            out[i * n + j] += s;
        }
    }
}

/// `out[k,n] += a[m,k]^T * b[m,n]`.
pub fn gemm_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

/// Matrix product of `a[m,k]` and `b[k,n]`. Vectors are treated as single rows.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = as_matrix(a);
    let (k2, n) = as_matrix(b);
    if k != k2 || a.rank() > 2 || b.rank() > 2 {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let mut out = vec![0.0; m * n];
    gemm_nn(&a.data, &b.data, m, k, n, &mut out);
    Tensor::new(&[m, n], out)
}

/// Gradients of `matmul(a, b)` with respect to `a` and `b`.
pub fn matmul_backward(a: &Tensor, b: &Tensor, grad: &Tensor) -> Result<(Tensor, Tensor)> {
    let (m, k) = as_matrix(a);
    let (_, n) = as_matrix(b);
    if grad.len() != m * n {
        return Err(Error::ShapeMismatch {
            op: "matmul_backward",
            left: vec![m, n],
            right: grad.shape.clone(),
        });
    }
    let mut ga = vec![0.0; m * k];
    gemm_nt(&grad.data, &b.data, m, n, k, &mut ga);
    let mut gb = vec![0.0; k * n];
    gemm_tn(&a.data, &grad.data, m, k, n, &mut gb);
    Ok((
        Tensor {
            shape: a.shape.clone(),
            data: ga,
        },
        Tensor {
            shape: b.shape.clone(),
            data: gb,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementwise {
    Add,
    Sub,
    Mul,
    Sigmoid,
    Tanh,
    Exp,
    Log1p,
}

impl Elementwise {
    pub fn is_binary(self) -> bool {
        matches!(self, Elementwise::Add | Elementwise::Sub | Elementwise::Mul)
    }
}

/// Applies `op` per element. Binary ops take `b` and require equal shapes.
pub fn elementwise(op: Elementwise, a: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    if op.is_binary() {
        let b = b.ok_or(Error::ShapeMismatch {
            op: "elementwise",
            left: a.shape.clone(),
            right: Vec::new(),
        })?;
        same_shape("elementwise", a, b)?;
        let f: fn(f64, f64) -> f64 = match op {
            Elementwise::Add => |x, y| x + y,
            Elementwise::Sub => |x, y| x - y,
            _ => |x, y| x * y,
        };
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
        return Ok(Tensor {
            shape: a.shape.clone(),
            data,
        });
    }
    match op {
        Elementwise::Sigmoid => Ok(a.map(math::sigmoid)),
        Elementwise::Tanh => Ok(a.map(math::tanh)),
        Elementwise::Exp => Ok(a.map(math::exp)),
        Elementwise::Log1p => {
            if let Some(&v) = a.data.iter().find(|&&v| v <= -1.0) {
                return Err(Error::Domain {
                    op: "log1p",
                    value: v,
                });
            }
            Ok(a.map(math::ln_1p))
        }
        _ => unreachable!(),
    }
}

/// Gradient of an elementwise op. Returns gradients for `a` and, for binary ops, `b`.
/// `out` is the forward result.
pub fn elementwise_backward(
    op: Elementwise,
    a: &Tensor,
    b: Option<&Tensor>,
    out: &Tensor,
    grad: &Tensor,
) -> Result<(Tensor, Option<Tensor>)> {
    same_shape("elementwise_backward", a, grad)?;
    let zip = |f: &dyn Fn(usize) -> f64| Tensor {
        shape: a.shape.clone(),
        data: (0..a.len()).map(f).collect(),
    };
    let g = &grad.data;
    Ok(match op {
        Elementwise::Add => (grad.clone(), Some(grad.clone())),
        Elementwise::Sub => (grad.clone(), Some(grad.scale(-1.0))),
        Elementwise::Mul => {
            let b = b.ok_or(Error::ShapeMismatch {
                op: "elementwise_backward",
                left: a.shape.clone(),
                right: Vec::new(),
            })?;
            (zip(&|i| g[i] * b.data[i]), Some(zip(&|i| g[i] * a.data[i])))
        }
        Elementwise::Sigmoid => (zip(&|i| g[i] * out.data[i] * (1.0 - out.data[i])), None),
        Elementwise::Tanh => (zip(&|i| g[i] * (1.0 - out.data[i] * out.data[i])), None),
        Elementwise::Exp => (zip(&|i| g[i] * out.data[i]), None),
        Elementwise::Log1p => (zip(&|i| g[i] / (1.0 + a.data[i])), None),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Mean,
    Max,
    /// Softmax across the last axis of a rank-2 tensor; keeps the shape.
    SoftmaxRows,
}

/// Reduces `a` along `axis`. `SoftmaxRows` ignores `axis` beyond validating it
/// and normalises each row.
pub fn reduce(op: Reduce, a: &Tensor, axis: usize) -> Result<Tensor> {
    if axis >= a.rank() || a.shape[axis] == 0 {
        return Err(Error::BadAxis {
            axis,
            rank: a.rank(),
        });
    }
    if op == Reduce::SoftmaxRows {
        return Ok(softmax_rows(a));
    }
    let outer: usize = a.shape[..axis].iter().product();
    let len = a.shape[axis];
    let inner: usize = a.shape[axis + 1..].iter().product();
    let mut out = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let lane = (0..len).map(|j| a.data[(o * len + j) * inner + i]);
            out.push(match op {
                Reduce::Sum => lane.sum(),
                Reduce::Mean => lane.sum::<f64>() / len as f64,
                Reduce::Max => lane.fold(f64::NEG_INFINITY, f64::max),
                Reduce::SoftmaxRows => unreachable!(),
            });
        }
    }
    let mut shape: Vec<usize> = a
        .shape
        .iter()
        .copied()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, d)| d)
        .collect();
    if shape.is_empty() {
        shape.push(1);
    }
    Tensor::new(&shape, out)
}

/// Row-wise softmax of a rank-1 or rank-2 tensor, shifted by the row maximum.
pub fn softmax_rows(a: &Tensor) -> Tensor {
    let c = a.cols();
    let mut out = a.clone();
    for row in out.data.chunks_mut(c) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = math::exp(*v - m);
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

/// Gradient of `softmax_rows` given its output `y`.
pub fn softmax_rows_backward(y: &Tensor, grad: &Tensor) -> Tensor {
    let c = y.cols();
    let mut out = grad.clone();
    for (orow, yrow) in out.data.chunks_mut(c).zip(y.data.chunks(c)) {
        let dot: f64 = orow.iter().zip(yrow).map(|(g, y)| g * y).sum();
        for (o, &yv) in orow.iter_mut().zip(yrow) {
            *o = yv * (*o - dot);
        }
    }
    out
}

/// Glorot/Xavier uniform initialisation in `±sqrt(6 / (fan_in + fan_out))`.
///
/// For shapes of rank above two the trailing dimensions are folded into the
/// receptive field, as for convolution kernels `[out, in, width]`.
pub fn glorot_init(shape: &[usize], seed: u64) -> Tensor {
    glorot_with(shape, &mut Rng::seed_from(seed))
}

pub fn glorot_with(shape: &[usize], rng: &mut Rng) -> Tensor {
    let (fan_in, fan_out) = fans(shape);
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_in(-limit, limit)).collect();
    Tensor {
        shape: shape.to_vec(),
        data,
    }
}

fn fans(shape: &[usize]) -> (usize, usize) {
    match shape.len() {
        0 => (1, 1),
        1 => (shape[0], shape[0]),
        2 => (shape[1], shape[0]),
        _ => {
            let field: usize = shape[2..].iter().product();
            (shape[1] * field, shape[0] * field)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{check_gradient, GradCheckConfig};

    fn t2(r: usize, c: usize, v: &[f64]) -> Tensor {
        Tensor::matrix(r, c, v.to_vec()).unwrap()
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(Tensor::new(&[2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(&[0, 2], vec![]).is_err());
    }

    #[test]
    fn matmul_identity() {
        let x = t2(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(matmul(&Tensor::identity(2), &x).unwrap(), x);
    }

    #[test]
    fn matmul_hand_example() {
        let out = matmul(&t2(1, 2, &[1.0, 2.0]), &t2(2, 1, &[3.0, 4.0])).unwrap();
        assert_eq!(out.shape(), &[1, 1]);
        assert_eq!(out.data(), &[11.0]);
    }

    #[test]
    fn matmul_zero_annihilates() {
        let b = glorot_init(&[3, 4], 1);
        let out = matmul(&Tensor::zeros(&[2, 3]), &b).unwrap();
        assert_eq!(out, Tensor::zeros(&[2, 4]));
    }

    #[test]
    fn matmul_shape_error_names_both() {
        let err = matmul(&Tensor::zeros(&[2, 3]), &Tensor::zeros(&[2, 3])).unwrap_err();
        match err {
            Error::ShapeMismatch { left, right, .. } => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![2, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn elementwise_examples() {
        let z = Tensor::vector(vec![0.0]);
        assert_eq!(
            elementwise(Elementwise::Sigmoid, &z, None).unwrap().data(),
            &[0.5]
        );
        assert_eq!(
            elementwise(Elementwise::Tanh, &z, None).unwrap().data(),
            &[0.0]
        );
        let a = Tensor::vector(vec![1.0, 2.0]);
        let b = Tensor::vector(vec![3.0, 4.0]);
        assert_eq!(
            elementwise(Elementwise::Add, &a, Some(&b)).unwrap().data(),
            &[4.0, 6.0]
        );
    }

    #[test]
    fn elementwise_errors() {
        let a = Tensor::vector(vec![1.0, 2.0]);
        let b = Tensor::vector(vec![1.0, 2.0, 3.0]);
        assert!(elementwise(Elementwise::Mul, &a, Some(&b)).is_err());
        let bad = Tensor::vector(vec![0.0, -1.0]);
        assert!(matches!(
            elementwise(Elementwise::Log1p, &bad, None),
            Err(Error::Domain { op: "log1p", .. })
        ));
    }

    #[test]
    fn reduce_examples() {
        let s = reduce(Reduce::Sum, &Tensor::vector(vec![1.0, 2.0, 3.0]), 0).unwrap();
        assert_eq!(s.data(), &[6.0]);
        let m = reduce(Reduce::Mean, &Tensor::zeros(&[5]), 0).unwrap();
        assert_eq!(m.data(), &[0.0]);
        let sm = reduce(Reduce::SoftmaxRows, &t2(1, 2, &[0.0, 0.0]), 1).unwrap();
        assert_eq!(sm.data(), &[0.5, 0.5]);
        let mx = reduce(Reduce::Max, &t2(2, 3, &[1.0, 5.0, 2.0, 7.0, 0.0, 3.0]), 0).unwrap();
        assert_eq!(mx.data(), &[7.0, 5.0, 3.0]);
        let cols = reduce(Reduce::Sum, &t2(2, 3, &[1.0, 5.0, 2.0, 7.0, 0.0, 3.0]), 1).unwrap();
        assert_eq!(cols.data(), &[8.0, 10.0]);
        assert!(reduce(Reduce::Sum, &Tensor::zeros(&[3]), 1).is_err());
    }

    #[test]
    fn glorot_deterministic_and_bounded() {
        assert_eq!(glorot_init(&[4, 4], 7), glorot_init(&[4, 4], 7));
        let t = glorot_init(&[100, 100], 123);
        let lim = math::sqrt(6.0 / 200.0);
        assert!(t.data().iter().all(|v| v.abs() <= lim));
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        let mut rng = Rng::seed_from(17);
        let a = glorot_with(&[3, 4], &mut rng);
        let b = glorot_with(&[4, 2], &mut rng);
        let proj = glorot_with(&[3, 2], &mut rng);
        let (ga, gb) = matmul_backward(&a, &b, &proj).unwrap();
        let loss = |x: &[f64]| {
            let a = Tensor::new(&[3, 4], x[..12].to_vec()).unwrap();
            let b = Tensor::new(&[4, 2], x[12..].to_vec()).unwrap();
            let y = matmul(&a, &b).unwrap();
            y.data()
                .iter()
                .zip(proj.data())
                .map(|(p, q)| p * q)
                .sum::<f64>()
        };
        let mut x = a.data().to_vec();
        x.extend_from_slice(b.data());
        let mut g = ga.data().to_vec();
        g.extend_from_slice(gb.data());
        check_gradient(&GradCheckConfig::default(), &x, &g, 20, 3, loss).unwrap();
    }

    #[test]
    fn unary_gradients_match_finite_differences() {
        for op in [
            Elementwise::Sigmoid,
            Elementwise::Tanh,
            Elementwise::Exp,
            Elementwise::Log1p,
        ] {
            let mut rng = Rng::seed_from(5);
            let x = glorot_with(&[2, 5], &mut rng);
            let proj = glorot_with(&[2, 5], &mut rng);
            let y = elementwise(op, &x, None).unwrap();
            let (g, _) = elementwise_backward(op, &x, None, &y, &proj).unwrap();
            let loss = |v: &[f64]| {
                let t = Tensor::new(&[2, 5], v.to_vec()).unwrap();
                let y = elementwise(op, &t, None).unwrap();
                y.data()
                    .iter()
                    .zip(proj.data())
                    .map(|(p, q)| p * q)
                    .sum::<f64>()
            };
            check_gradient(&GradCheckConfig::default(), x.data(), g.data(), 10, 1, loss).unwrap();
        }
    }

    #[test]
    fn binary_gradients_match_finite_differences() {
        for op in [Elementwise::Add, Elementwise::Sub, Elementwise::Mul] {
            let mut rng = Rng::seed_from(8);
            let a = glorot_with(&[3, 3], &mut rng);
            let b = glorot_with(&[3, 3], &mut rng);
            let proj = glorot_with(&[3, 3], &mut rng);
            let y = elementwise(op, &a, Some(&b)).unwrap();
            let (ga, gb) = elementwise_backward(op, &a, Some(&b), &y, &proj).unwrap();
            let loss = |v: &[f64]| {
                let a = Tensor::new(&[3, 3], v[..9].to_vec()).unwrap();
                let b = Tensor::new(&[3, 3], v[9..].to_vec()).unwrap();
                let y = elementwise(op, &a, Some(&b)).unwrap();
                y.data()
                    .iter()
                    .zip(proj.data())
                    .map(|(p, q)| p * q)
                    .sum::<f64>()
            };
            let mut x = a.data().to_vec();
            x.extend_from_slice(b.data());
            let mut g = ga.data().to_vec();
            g.extend_from_slice(gb.unwrap().data());
            check_gradient(&GradCheckConfig::default(), &x, &g, 18, 2, loss).unwrap();
        }
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        let mut rng = Rng::seed_from(21);
        let x = glorot_with(&[3, 4], &mut rng).scale(3.0);
        let proj = glorot_with(&[3, 4], &mut rng);
        let y = softmax_rows(&x);
        let g = softmax_rows_backward(&y, &proj);
        let loss = |v: &[f64]| {
            let y = softmax_rows(&Tensor::new(&[3, 4], v.to_vec()).unwrap());
            y.data()
                .iter()
                .zip(proj.data())
                .map(|(p, q)| p * q)
                .sum::<f64>()
        };
        check_gradient(&GradCheckConfig::default(), x.data(), g.data(), 12, 4, loss).unwrap();
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mat(r: usize, c: usize) -> impl Strategy<Value = Tensor> {
            proptest::collection::vec(-10.0f64..10.0, r * c)
                .prop_map(move |v| Tensor::matrix(r, c, v).unwrap())
        }

        proptest! {
            #[test]
            fn matmul_is_associative(a in mat(3, 4), b in mat(4, 2), c in mat(2, 5)) {
                let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
                let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
                let scale = left.data().iter().chain(right.data()).fold(1.0f64, |m, v| m.max(v.abs()));
                for (x, y) in left.data().iter().zip(right.data()) {
                    prop_assert!((x - y).abs() <= 1e-9 * scale);
                }
            }

            #[test]
            fn softmax_rows_is_row_stochastic(a in mat(4, 6)) {
                let s = softmax_rows(&a.scale(10.0));
                for i in 0..4 {
                    let row = s.row(i);
                    prop_assert!(row.iter().all(|&v| v >= 0.0));
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
