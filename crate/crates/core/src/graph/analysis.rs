//! Limits of repeated propagation and the matching over-smoothing measure.
//!
//! On a connected graph with self-loops, powers of the two normalized
//! adjacencies converge to rank-one matrices:
//!
//! * `D̃^{-1/2} Ã D̃^{-1/2}` tends to `u uᵀ` with `u = √d̃ / ‖√d̃‖`, so
//!   propagated rows end up proportional to `√d̃_i`;
//! * `D̃^{-1} Ã` tends to `e π` with `π = d̃ / Σ d̃`, so every propagated row
//!   is the same vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, SparseMatrix};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_PAIR_BUDGET: usize = 200_000;

const EPS: f64 = 1e-12;

/// Which normalized adjacency drives propagation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// `D̃^{-1/2} Ã D̃^{-1/2}`
    Sym,
    /// `D̃^{-1} Ã`
    Rw,
}

impl Propagation {
    pub fn matrix(self, looped: &Graph) -> Result<SparseMatrix> {
        match self {
            Propagation::Sym => SparseMatrix::normalize_sym(looped),
            Propagation::Rw => SparseMatrix::normalize_rw(looped),
        }
    }

    /// The closed-form limit of `m^k` for this mode.
    pub fn limit(self, looped: &Graph) -> DenseMatrix {
        let n = looped.num_nodes();
        let d: Vec<f64> = looped.degrees().iter().map(|&x| x as f64).collect();
        match self {
            Propagation::Sym => {
                let norm = d.iter().sum::<f64>().sqrt();
                let u: Vec<f64> = d.iter().map(|x| x.sqrt() / norm).collect();
                DenseMatrix::from_fn(n, n, |i, j| u[i] * u[j])
            }
            Propagation::Rw => {
                let total: f64 = d.iter().sum();
                DenseMatrix::from_fn(n, n, |_, j| d[j] / total)
            }
        }
    }

    /// Scale factor `c_ij` such that `h_i = c_ij h_j` on the limit pattern.
    fn pair_scale(self, di: f64, dj: f64) -> f64 {
        match self {
            Propagation::Sym => (di / dj).sqrt(),
            Propagation::Rw => 1.0,
        }
    }
}

/// Applies `m` to the identity `k` times and reports `(m^k, max |m^k − limit|)`.
///
/// `g` must be connected and carry self-loops; `m` is the matrix built from it
/// with `mode`.
pub fn power_limit_residual(
    m: &SparseMatrix,
    mode: Propagation,
    g: &Graph,
    k: usize,
) -> Result<(DenseMatrix, f64)> {
    if k == 0 {
        return Err(Error::Config("power_limit_residual needs k >= 1".into()));
    }
    if m.dim() != g.num_nodes() {
        return Err(Error::shape("power_limit_residual", g.num_nodes(), m.dim()));
    }
    let (_, components) = g.components();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let mut p = DenseMatrix::identity(m.dim());
    for _ in 0..k {
        p = m.spmm_unchecked(&p);
    }
    let residual = p.max_abs_diff(&mode.limit(g));
    Ok((p, residual))
}

/// Mean of `‖h_i − c_ij h_j‖ / (‖h_i‖ + ‖h_j‖ + ε)` over ordered node pairs
/// `i ≠ j`, where `c_ij` is the limit scale of `mode` (1 for `Rw`,
/// `√(d̃_i / d̃_j)` for `Sym`). Zero means the rows sit exactly on the limit
/// pattern.
///
/// All pairs are used when `n² ≤ pair_budget`; otherwise `pair_budget` pairs
/// are drawn uniformly with a generator seeded by `seed`.
pub fn oversmooth_residual(
    h: &DenseMatrix,
    g: &Graph,
    mode: Propagation,
    pair_budget: usize,
    seed: u64,
) -> Result<f64> {
    let n = g.num_nodes();
    if h.rows() != n {
        return Err(Error::shape("oversmooth_residual", n, h.rows()));
    }
    if let Some(i) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::ZeroDegree(i));
    }
    if n < 2 {
        return Ok(0.0);
    }
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    let norms: Vec<f64> = (0..n).map(|i| l2(h.row(i))).collect();
    let term = |i: usize, j: usize| {
        let c = mode.pair_scale(deg[i], deg[j]);
        let diff: f64 = h
            .row(i)
            .iter()
            .zip(h.row(j))
            .map(|(a, b)| (a - c * b).powi(2))
            .sum::<f64>()
            .sqrt();
        diff / (norms[i] + norms[j] + EPS)
    };

    if n.saturating_mul(n) <= pair_budget {
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += term(i, j);
                }
            }
        }
        Ok(total / (n * (n - 1)) as f64)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        for _ in 0..pair_budget {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            total += term(i, j);
        }
        Ok(total / pair_budget as f64)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)])
            .unwrap()
            .add_self_loops()
    }

    #[test]
    fn triangle_rw_limit() {
        let g = triangle();
        let m = SparseMatrix::normalize_rw(&g).unwrap();
        let (p, res) = power_limit_residual(&m, Propagation::Rw, &g, 60).unwrap();
        assert!(res < 1e-10);
        for v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn edge_rw_limit() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap().add_self_loops();
        let lim = Propagation::Rw.limit(&g);
        assert_eq!(lim.data(), &[0.5; 4]);
        let m = SparseMatrix::normalize_rw(&g).unwrap();
        // (D̃^{-1}Ã) is already idempotent here
        assert!(power_limit_residual(&m, Propagation::Rw, &g, 1).unwrap().1 < 1e-15);
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)])
            .unwrap()
            .add_self_loops();
        let m = SparseMatrix::normalize_sym(&g).unwrap();
        assert!(matches!(
            power_limit_residual(&m, Propagation::Sym, &g, 5),
            Err(Error::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn identical_rows_have_zero_rw_residual() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)])
            .unwrap()
            .add_self_loops();
        let h = DenseMatrix::from_fn(5, 3, |_, j| [0.3, -1.2, 2.0][j]);
        assert_eq!(
            oversmooth_residual(&h, &g, Propagation::Rw, DEFAULT_PAIR_BUDGET, 0).unwrap(),
            0.0
        );
    }

    #[test]
    fn sqrt_degree_rows_have_zero_sym_residual() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 2), (0, 3)])
            .unwrap()
            .add_self_loops();
        let u = [0.6, 0.0, -0.8];
        let h = DenseMatrix::from_fn(6, 3, |i, j| (g.degree(i) as f64).sqrt() * u[j]);
        let r = oversmooth_residual(&h, &g, Propagation::Sym, DEFAULT_PAIR_BUDGET, 0).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn random_rows_positive_and_sampling_is_seeded() {
        let edges: Vec<_> = (0..499).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(500, &edges).unwrap().add_self_loops();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = DenseMatrix::from_fn(500, 4, |_, _| rng.random_range(-1.0..1.0));
        let a = oversmooth_residual(&h, &g, Propagation::Sym, 10_000, 9).unwrap();
        let b = oversmooth_residual(&h, &g, Propagation::Sym, 10_000, 9).unwrap();
        assert!(a > 0.0);
        assert_eq!(a, b);
    }
}
