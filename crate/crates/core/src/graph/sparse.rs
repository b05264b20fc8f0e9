use rayon::prelude::*;

use super::Graph;
use crate::dense::{DenseMatrix, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square CSR matrix sharing the structure of a [`Graph`].
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    fn with_values(g: &Graph, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(g.indices().len());
        for i in 0..g.num_nodes() {
            for &j in g.neighbors(i) {
                values.push(f(i, j));
            }
        }
        Self {
            n: g.num_nodes(),
            offsets: g.offsets().to_vec(),
            indices: g.indices().to_vec(),
            values,
        }
    }

    fn check_degrees(g: &Graph) -> Result<()> {
        match g.degrees().iter().position(|&d| d == 0) {
            Some(i) => Err(Error::ZeroDegree(i)),
            None => Ok(()),
        }
    }

    /// Adjacency pattern with unit weights.
    pub fn adjacency(g: &Graph) -> Self {
        Self::with_values(g, |_, _| 1.0)
    }

    /// `D̃^{-1/2} Ã D̃^{-1/2}`; pass a graph that already carries its loops.
    pub fn normalize_sym(g: &Graph) -> Result<Self> {
        Self::check_degrees(g)?;
        let d = g.degrees();
        Ok(Self::with_values(g, |i, j| {
            1.0 / ((d[i] * d[j]) as f64).sqrt()
        }))
    }

    /// `D̃^{-1} Ã`, a row-stochastic transition matrix.
    pub fn normalize_rw(g: &Graph) -> Result<Self> {
        Self::check_degrees(g)?;
        Ok(Self::with_values(g, |i, _| 1.0 / g.degree(i) as f64))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (idx, vals) = self.row(i);
            idx.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
        })
    }

    /// `self · x`. Each output row accumulates its terms in ascending column
    /// order, independent of how rows are split across threads.
    pub fn spmm<T: Scalar>(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.rows() != self.n {
            return Err(Error::shape("spmm", self.n, x.rows()));
        }
        Ok(self.spmm_unchecked(x))
    }

    pub(crate) fn spmm_unchecked<T: Scalar>(&self, x: &Matrix<T>) -> Matrix<T> {
        let m = x.cols();
        let mut out = Matrix::zeros(self.n, m);
        if m == 0 {
            return out;
        }
        let xd = x.data();
        let kernel = |(i, orow): (usize, &mut [T])| {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                let v = T::from_f64(v);
                for (o, &xv) in orow.iter_mut().zip(&xd[j * m..(j + 1) * m]) {
                    *o += v * xv;
                }
            }
        };
        if self.nnz() * m >= 1 << 16 {
            out.data_mut()
                .par_chunks_mut(m)
                .enumerate()
                .for_each(kernel);
        } else {
            out.data_mut().chunks_mut(m).enumerate().for_each(kernel);
        }
        out
    }

    /// `selfᵀ · x`, the vector-Jacobian product of [`spmm`](Self::spmm).
    pub(crate) fn spmm_transpose<T: Scalar>(&self, x: &Matrix<T>) -> Matrix<T> {
        let m = x.cols();
        let mut out = Matrix::zeros(self.n, m);
        let xd = x.data();
        let od = out.data_mut();
        for i in 0..self.n {
            let (idx, vals) = self.row(i);
            let xrow = &xd[i * m..(i + 1) * m];
            for (&j, &v) in idx.iter().zip(vals) {
                let v = T::from_f64(v);
                for (o, &xv) in od[j * m..(j + 1) * m].iter_mut().zip(xrow) {
                    *o += v * xv;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn looped(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges).unwrap().add_self_loops()
    }

    #[test]
    fn sym_on_single_edge() {
        let a = SparseMatrix::normalize_sym(&looped(2, &[(0, 1)])).unwrap();
        assert_eq!(a.to_dense().data(), &[0.5; 4]);
    }

    #[test]
    fn sym_on_triangle() {
        let a = SparseMatrix::normalize_sym(&looped(3, &[(0, 1), (1, 2), (0, 2)])).unwrap();
        for v in a.to_dense().data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(a.is_symmetric());
    }

    #[test]
    fn rw_rows() {
        let a = SparseMatrix::normalize_rw(&looped(2, &[(0, 1)])).unwrap();
        assert_eq!(a.to_dense().data(), &[0.5; 4]);
    }

    #[test]
    fn zero_degree_is_rejected() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            SparseMatrix::normalize_sym(&g),
            Err(Error::ZeroDegree(2))
        ));
        assert!(matches!(
            SparseMatrix::normalize_rw(&g),
            Err(Error::ZeroDegree(2))
        ));
    }

    #[test]
    fn identity_pattern_spmm() {
        let g = Graph::from_edges(4, &[]).unwrap().add_self_loops();
        let eye = SparseMatrix::adjacency(&g);
        let x = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(eye.spmm(&x).unwrap(), x);
    }

    #[test]
    fn rw_times_ones() {
        let g = looped(5, &[(0, 1), (1, 2), (2, 3), (0, 4), (1, 4)]);
        let p = SparseMatrix::normalize_rw(&g).unwrap();
        let y = p.spmm(&DenseMatrix::filled(5, 1, 1.0)).unwrap();
        for v in y.data() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let g = looped(3, &[(0, 1)]);
        let a = SparseMatrix::normalize_sym(&g).unwrap();
        assert!(a.spmm(&DenseMatrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn transpose_product_matches_dense() {
        let g = looped(4, &[(0, 1), (1, 2), (2, 3)]);
        let p = SparseMatrix::normalize_rw(&g).unwrap();
        let x = DenseMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        let expect = p.to_dense().transpose().matmul(&x).unwrap();
        assert!(p.spmm_transpose(&x).max_abs_diff(&expect) < 1e-15);
    }
}
