#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use toporeg::{seed, DenseMatrix, Graph};

/// Random spanning tree plus `extra` random edges.
pub fn random_connected(n: usize, extra: usize, s: u64) -> Graph {
    let mut rng = seed::rng(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((order[k], order[rng.random_range(0..k)]));
    }
    for _ in 0..extra {
        edges.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Erdős–Rényi graph.
pub fn gnp(n: usize, p: f64, s: u64) -> Graph {
    let mut rng = seed::rng(s);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_matrix(n: usize, d: usize, s: u64) -> DenseMatrix {
    let mut rng = seed::rng(s);
    DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
}

pub fn to_nalgebra(m: &DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}
