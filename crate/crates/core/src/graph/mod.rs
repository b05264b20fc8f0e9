//! Undirected graphs in CSR form, adjacency normalizations and the
//! over-smoothing limit checks.

mod analysis;
mod sparse;

pub use analysis::{oversmooth_residual, power_limit_residual, Propagation, DEFAULT_PAIR_BUDGET};
pub use sparse::SparseMatrix;

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Immutable undirected graph.
///
/// Rows of `indices` are strictly increasing, every edge is stored in both
/// directions, and self-loops only appear after [`Graph::add_self_loops`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    degrees: Vec<usize>,
    self_loops: bool,
}

impl Graph {
    /// Deduplicates and symmetrizes `edges`. Self-pairs `(i, i)` are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange(u, v, n));
            }
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_adjacency(adj, false))
    }

    fn from_adjacency(mut adj: Vec<Vec<usize>>, self_loops: bool) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut indices = Vec::new();
        let mut degrees = Vec::with_capacity(adj.len());
        offsets.push(0);
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
            degrees.push(row.len());
            indices.extend_from_slice(row);
            offsets.push(indices.len());
        }
        Self {
            offsets,
            indices,
            degrees,
            self_loops,
        }
    }

    /// `Ã = A + I`: one loop per node, so every degree grows by exactly one.
    pub fn add_self_loops(&self) -> Self {
        if self.self_loops {
            return self.clone();
        }
        let adj = (0..self.num_nodes())
            .map(|i| {
                let mut row = self.neighbors(i).to_vec();
                row.push(i);
                row
            })
            .collect();
        Self::from_adjacency(adj, true)
    }

    /// Drops stored loops, returning the plain adjacency `A`.
    pub fn without_self_loops(&self) -> Self {
        if !self.self_loops {
            return self.clone();
        }
        let adj = (0..self.num_nodes())
            .map(|i| {
                self.neighbors(i)
                    .iter()
                    .copied()
                    .filter(|&j| j != i)
                    .collect()
            })
            .collect();
        Self::from_adjacency(adj, false)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges, loops excluded.
    pub fn num_edges(&self) -> usize {
        let loops = if self.self_loops { self.num_nodes() } else { 0 };
        (self.indices.len() - loops) / 2
    }

    #[inline]
    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in CSR order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes() {
            for &j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Component id per node (BFS order of discovery) and the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.num_nodes();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes() == 0 || self.components().1 == 1
    }

    /// Nodes of the largest connected component, ascending. Ties go to the
    /// component discovered first.
    pub fn largest_component(&self) -> Vec<usize> {
        let (comp, count) = self.components();
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        let best = (0..count).fold(0, |b, c| if sizes[c] > sizes[b] { c } else { b });
        (0..self.num_nodes()).filter(|&i| comp[i] == best).collect()
    }

    /// Induced subgraph on `nodes` (relabelled `0..nodes.len()` in the given order).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.num_nodes()];
        for (new, &old) in nodes.iter().enumerate() {
            map[old] = new;
        }
        let adj = nodes
            .iter()
            .map(|&old| {
                self.neighbors(old)
                    .iter()
                    .filter_map(|&j| (map[j] != usize::MAX).then_some(map[j]))
                    .collect()
            })
            .collect();
        Self::from_adjacency(adj, self.self_loops)
    }
}
