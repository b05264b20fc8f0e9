use crate::dense::DenseMatrix;
use crate::graph::Graph;

/// Row-wise softmax `exp(v_k) / Σ_j exp(v_j)`, computed after subtracting the
/// row maximum.
pub fn softmax_refine(e: &DenseMatrix) -> DenseMatrix {
    let mut out = e.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Replaces the rows of zero-degree nodes with all ones. Other rows are
/// left untouched.
pub fn fill_isolated(g: &Graph, e: &DenseMatrix) -> DenseMatrix {
    let mut out = e.clone();
    for i in 0..g.num_nodes() {
        if g.degree(i) == 0 {
            out.row_mut(i).fill(1.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_row_is_uniform() {
        let e = DenseMatrix::filled(1, 4, 3.7);
        assert_eq!(softmax_refine(&e).row(0), &[0.25; 4]);
    }

    #[test]
    fn closed_form_pair() {
        let e = DenseMatrix::from_rows(&[vec![0.0, 3f64.ln()]]).unwrap();
        let r = softmax_refine(&e);
        assert!((r.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((r.get(0, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn isolated_rows_become_ones() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 3)]).unwrap();
        let e = DenseMatrix::from_fn(4, 3, |i, j| (i as f64 - j as f64) * 0.37);
        let f = fill_isolated(&g, &e);
        assert_eq!(f.row(2), &[1.0; 3]);
        for i in [0, 1, 3] {
            assert_eq!(f.row(i), e.row(i));
        }
        let connected = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let e2 = DenseMatrix::filled(2, 2, -0.5);
        assert_eq!(fill_isolated(&connected, &e2), e2);
    }

    proptest! {
        #[test]
        fn rows_are_positive_distributions(v in prop::collection::vec(-50.0f64..50.0, 1..32),
                                           shift in -100.0f64..100.0) {
            let e = DenseMatrix::from_vec(1, v.len(), v.clone()).unwrap();
            let r = softmax_refine(&e);
            let s: f64 = r.row(0).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(r.row(0).iter().all(|&x| x > 0.0));
            let shifted = DenseMatrix::from_vec(1, v.len(), v.iter().map(|x| x + shift).collect()).unwrap();
            prop_assert!(softmax_refine(&shifted).max_abs_diff(&r) < 1e-12);
        }
    }
}
