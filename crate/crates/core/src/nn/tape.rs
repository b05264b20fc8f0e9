//! Reverse-mode differentiation over a closed set of matrix primitives.
//!
//! A [`Tape`] lives for one forward pass. Every primitive pushes its output
//! onto the tape together with whatever it needs for the backward pass;
//! [`Tape::backward`] then walks the tape in reverse and applies each
//! primitive's vector-Jacobian product.

use std::sync::Arc;

use super::params::{ParamId, ParamStore};
use crate::dense::{matmul_nn, matmul_nt, matmul_tn, Matrix};
use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::scalar::Scalar;
use crate::seed;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    id: usize,
    rows: usize,
    cols: usize,
}

impl Var {
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn id(&self) -> usize {
        self.id
    }
}

enum Op<T> {
    Constant,
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Spmm(Arc<SparseMatrix>, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Dropout(Var, Vec<T>),
    LogSoftmaxRows(Var),
    RowL2Normalize { x: Var, norms: Vec<T>, eps: T },
    Square(Var),
    ReduceMean(Var),
    ReduceSum(Var),
    DotRows(Var, Var),
}

struct Node<T> {
    value: Arc<Matrix<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// Recording of one forward pass.
pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    training: bool,
}

impl<T: Scalar> Tape<T> {
    /// `training == false` turns dropout into the identity.
    pub fn new(training: bool) -> Self {
        Self {
            nodes: Vec::new(),
            training,
        }
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.push_shared(Arc::new(value), op, needs_grad)
    }

    fn push_shared(&mut self, value: Arc<Matrix<T>>, op: Op<T>, needs_grad: bool) -> Var {
        let (rows, cols) = value.shape();
        let id = self.nodes.len();
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var { id, rows, cols }
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.id].needs_grad
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.id].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v).get(0, 0)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, m: Matrix<T>) -> Var {
        self.push(m, Op::Constant, false)
    }

    /// Like [`constant`](Self::constant) without copying the buffer.
    pub fn constant_shared(&mut self, m: Arc<Matrix<T>>) -> Var {
        self.push_shared(m, Op::Constant, false)
    }

    /// Free input that does receive a gradient (used by gradient checks).
    pub fn leaf(&mut self, m: Matrix<T>) -> Var {
        self.push(m, Op::Leaf, true)
    }

    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    /// Records every parameter of `store`, in id order.
    pub fn params(&mut self, store: &ParamStore<T>) -> Vec<Var> {
        store.ids().map(|id| self.param(store, id)).collect()
    }

    fn same_shape(op: &'static str, a: Var, b: Var) -> Result<()> {
        if a.shape() != b.shape() {
            return Err(Error::shape(
                op,
                format!("{:?}", a.shape()),
                format!("{:?}", b.shape()),
            ));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        if a.cols != b.rows {
            return Err(Error::shape(
                "matmul",
                format!("inner dim {}", a.cols),
                b.rows,
            ));
        }
        let out = matmul_nn(self.value(a), self.value(b));
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    /// `m · x` for a fixed sparse `m`.
    pub fn spmm(&mut self, m: &Arc<SparseMatrix>, x: Var) -> Result<Var> {
        let out = m.spmm(self.value(x))?;
        let ng = self.needs(x);
        Ok(self.push(out, Op::Spmm(Arc::clone(m), x), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape("add", a, b)?;
        let mut out = self.value(a).clone();
        for (o, &v) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o += v;
        }
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape("sub", a, b)?;
        let mut out = self.value(a).clone();
        for (o, &v) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o -= v;
        }
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Sub(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let out = self.value(a).map(|v| v * c);
        let ng = self.needs(a);
        self.push(out, Op::Scale(a, c), ng)
    }

    /// `max(x, 0)`; the subgradient at 0 is taken as 0.
    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| if v > T::ZERO { v } else { T::ZERO });
        let ng = self.needs(a);
        self.push(out, Op::Relu(a), ng)
    }

    /// Inverted dropout. Element `(i, j)` survives iff
    /// `uniform(seed, i, j) >= rate`, so the mask is a pure function of the
    /// seed. Identity when the tape is not training or `rate == 0`.
    pub fn dropout(&mut self, a: Var, rate: f64, seed: u64) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !self.training || rate == 0.0 {
            return Ok(a);
        }
        let keep = T::from_f64(1.0 / (1.0 - rate));
        let (rows, cols) = a.shape();
        let mut mask = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let u = seed::uniform(seed, i as u64, j as u64);
                mask.push(if u >= rate { keep } else { T::ZERO });
            }
        }
        let mut out = self.value(a).clone();
        for (o, &m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        let ng = self.needs(a);
        Ok(self.push(out, Op::Dropout(a, mask), ng))
    }

    /// Row-wise log-softmax with max subtraction.
    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            let mx = row.iter().copied().fold(row[0], T::max);
            let lse = row.iter().map(|&v| (v - mx).exp()).sum::<T>().ln() + mx;
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        let ng = self.needs(a);
        self.push(out, Op::LogSoftmaxRows(a), ng)
    }

    /// `x_i / (‖x_i‖ + eps)` per row.
    pub fn row_l2_normalize(&mut self, a: Var, eps: T) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        let mut norms = Vec::with_capacity(out.rows());
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            let r = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            let s = r + eps;
            for v in row.iter_mut() {
                *v /= s;
            }
            norms.push(r);
        }
        let ng = self.needs(a);
        self.push(out, Op::RowL2Normalize { x: a, norms, eps }, ng)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v * v);
        let ng = self.needs(a);
        self.push(out, Op::Square(a), ng)
    }

    /// Mean of all entries, as a 1×1 value.
    pub fn reduce_mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let n = T::from_f64(x.data().len() as f64);
        let out = Matrix::filled(1, 1, x.sum() / n);
        let ng = self.needs(a);
        self.push(out, Op::ReduceMean(a), ng)
    }

    /// Sum of all entries, as a 1×1 value.
    pub fn reduce_sum(&mut self, a: Var) -> Var {
        let out = Matrix::filled(1, 1, self.value(a).sum());
        let ng = self.needs(a);
        self.push(out, Op::ReduceSum(a), ng)
    }

    /// Row-wise inner products: `out[i] = a_i · b_i`, shape n×1.
    pub fn dot_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape("dot_rows", a, b)?;
        let (xa, xb) = (self.value(a), self.value(b));
        let out = Matrix::from_fn(a.rows, 1, |i, _| {
            xa.row(i).iter().zip(xb.row(i)).map(|(&p, &q)| p * q).sum()
        });
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::DotRows(a, b), ng))
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if loss.shape() != (1, 1) {
            return Err(Error::shape(
                "backward",
                "(1, 1)",
                format!("{:?}", loss.shape()),
            ));
        }
        let mut grads: Vec<Option<Matrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(Matrix::filled(1, 1, T::ONE));

        for id in (0..=loss.id).rev() {
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[id] = Some(g);
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(p) => Some((p, i)),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, node: &Node<T>, g: &Matrix<T>, grads: &mut [Option<Matrix<T>>]) {
        let val = |v: Var| -> &Matrix<T> { &self.nodes[v.id].value };
        let mut send = |v: Var, contribution: Matrix<T>| {
            if !self.nodes[v.id].needs_grad {
                return;
            }
            match &mut grads[v.id] {
                Some(acc) => {
                    for (a, c) in acc.data_mut().iter_mut().zip(contribution.data()) {
                        *a += *c;
                    }
                }
                slot @ None => *slot = Some(contribution),
            }
        };

        match &node.op {
            Op::Constant | Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    send(*a, matmul_nt(g, val(*b)));
                }
                if self.needs(*b) {
                    send(*b, matmul_tn(val(*a), g));
                }
            }
            Op::Spmm(m, x) => send(*x, m.spmm_transpose(g)),
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.map(|v| -v));
            }
            Op::Scale(a, c) => send(*a, g.map(|v| v * *c)),
            Op::Relu(a) => {
                let mut out = g.clone();
                for (o, &y) in out.data_mut().iter_mut().zip(node.value.data()) {
                    if y <= T::ZERO {
                        *o = T::ZERO;
                    }
                }
                send(*a, out);
            }
            Op::Dropout(a, mask) => {
                let mut out = g.clone();
                for (o, &m) in out.data_mut().iter_mut().zip(mask) {
                    *o *= m;
                }
                send(*a, out);
            }
            Op::LogSoftmaxRows(a) => {
                let y = &node.value;
                let mut out = g.clone();
                for i in 0..out.rows() {
                    let gs: T = g.row(i).iter().copied().sum();
                    for (o, &yv) in out.row_mut(i).iter_mut().zip(y.row(i)) {
                        *o -= yv.exp() * gs;
                    }
                }
                send(*a, out);
            }
            Op::RowL2Normalize { x, norms, eps } => {
                let xv = val(*x);
                let mut out = g.clone();
                for (i, &r) in norms.iter().enumerate() {
                    let s = r + *eps;
                    let xr = xv.row(i);
                    let proj = if r > T::ZERO {
                        xr.iter().zip(g.row(i)).map(|(&p, &q)| p * q).sum::<T>() / (r * s * s)
                    } else {
                        T::ZERO
                    };
                    for (o, &xi) in out.row_mut(i).iter_mut().zip(xr) {
                        *o = *o / s - xi * proj;
                    }
                }
                send(*x, out);
            }
            Op::Square(a) => {
                let two = T::from_f64(2.0);
                let mut out = g.clone();
                for (o, &x) in out.data_mut().iter_mut().zip(val(*a).data()) {
                    *o *= two * x;
                }
                send(*a, out);
            }
            Op::ReduceMean(a) => {
                let (r, c) = a.shape();
                let v = g.get(0, 0) / T::from_f64((r * c) as f64);
                send(*a, Matrix::filled(r, c, v));
            }
            Op::ReduceSum(a) => {
                let (r, c) = a.shape();
                send(*a, Matrix::filled(r, c, g.get(0, 0)));
            }
            Op::DotRows(a, b) => {
                let (xa, xb) = (val(*a), val(*b));
                let scale_rows = |m: &Matrix<T>| {
                    let mut out = m.clone();
                    for i in 0..out.rows() {
                        let gi = g.get(i, 0);
                        for v in out.row_mut(i) {
                            *v *= gi;
                        }
                    }
                    out
                };
                if self.needs(*a) {
                    send(*a, scale_rows(xb));
                }
                if self.needs(*b) {
                    send(*b, scale_rows(xa));
                }
            }
        }
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
    params: Vec<(ParamId, usize)>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to a recorded value; `None` if the loss does
    /// not depend on it.
    pub fn wrt(&self, v: Var) -> Option<&Matrix<T>> {
        self.grads[v.id].as_ref()
    }

    /// One gradient per parameter of `store`, zeros for parameters that
    /// did not reach the loss.
    pub fn for_params(&self, store: &ParamStore<T>) -> Vec<Matrix<T>> {
        let mut out: Vec<Matrix<T>> = store
            .ids()
            .map(|id| {
                let (r, c) = store.value(id).shape();
                Matrix::zeros(r, c)
            })
            .collect();
        for &(pid, node) in &self.params {
            if let Some(g) = &self.grads[node] {
                for (o, &v) in out[pid.index()].data_mut().iter_mut().zip(g.data()) {
                    *o += v;
                }
            }
        }
        out
    }
}
