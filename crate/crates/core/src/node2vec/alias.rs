use rand::Rng;

use crate::graph::Graph;

/// Walker/Vose alias table: O(1) sampling from a fixed discrete distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Builds a table from nonnegative weights (at least one positive).
    pub fn new(weights: &[f64]) -> Self {
        let k = weights.len();
        let total: f64 = weights.iter().sum();
        let mut prob: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
        let mut alias = vec![0; k];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| prob[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        Self { prob, alias }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }

    /// Exact outcome probabilities encoded by the table.
    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.prob.len() as f64;
        let mut p = vec![0.0; self.prob.len()];
        for i in 0..self.prob.len() {
            p[i] += self.prob[i] / k;
            p[self.alias[i]] += (1.0 - self.prob[i]) / k;
        }
        p
    }
}

/// Second-order node2vec transition tables.
///
/// For a step that arrived at `cur` from `prev`, the unnormalized weight of
/// moving on to neighbor `x` of `cur` is `1/p` if `x == prev`, `1` if `x` is
/// also a neighbor of `prev`, and `1/q` otherwise.
#[derive(Clone, Debug)]
pub struct TransitionTables {
    /// Indexed like the CSR entries of the graph: entry `offsets[prev] + k`
    /// is the table for the directed edge `prev → neighbors(prev)[k]`.
    edge_tables: Vec<AliasTable>,
}

impl TransitionTables {
    pub fn build(g: &Graph, p: f64, q: f64) -> Self {
        let mut edge_tables = Vec::with_capacity(g.indices().len());
        for prev in 0..g.num_nodes() {
            for &cur in g.neighbors(prev) {
                let weights: Vec<f64> = g
                    .neighbors(cur)
                    .iter()
                    .map(|&x| transition_weight(g, prev, x, p, q))
                    .collect();
                edge_tables.push(AliasTable::new(&weights));
            }
        }
        Self { edge_tables }
    }

    /// Table for the move out of `cur` after arriving from `prev`.
    pub fn table(&self, g: &Graph, prev: usize, cur: usize) -> &AliasTable {
        let k = g
            .neighbors(prev)
            .binary_search(&cur)
            .expect("(prev, cur) must be an edge");
        &self.edge_tables[g.offsets()[prev] + k]
    }

    /// Normalized probabilities over `neighbors(cur)` for the move after
    /// `prev → cur`.
    pub fn probabilities(&self, g: &Graph, prev: usize, cur: usize) -> Vec<f64> {
        self.table(g, prev, cur).probabilities()
    }
}

fn transition_weight(g: &Graph, prev: usize, x: usize, p: f64, q: f64) -> f64 {
    if x == prev {
        1.0 / p
    } else if g.has_edge(prev, x) {
        1.0
    } else {
        1.0 / q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn uniform_when_p_q_one() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)]).unwrap();
        let t = TransitionTables::build(&g, 1.0, 1.0);
        for prev in 0..5 {
            for &cur in g.neighbors(prev) {
                let probs = t.probabilities(&g, prev, cur);
                let k = g.degree(cur) as f64;
                for pr in probs {
                    assert!((pr - 1.0 / k).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn path_weights_follow_rule() {
        // a=0, b=1, c=2
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let (p, q) = (0.25, 4.0);
        let t = TransitionTables::build(&g, p, q);
        let probs = t.probabilities(&g, 0, 1);
        let z = 1.0 / p + 1.0 / q;
        assert!((probs[0] - (1.0 / p) / z).abs() < 1e-12);
        assert!((probs[1] - (1.0 / q) / z).abs() < 1e-12);
    }

    #[test]
    fn alias_probabilities_match_weights() {
        let w = [0.5, 2.0, 0.0, 1.5, 3.0];
        let t = AliasTable::new(&w);
        let total: f64 = w.iter().sum();
        for (p, wi) in t.probabilities().iter().zip(w) {
            assert!((p - wi / total).abs() < 1e-12);
        }
        let mut rng = seed::rng(1);
        for _ in 0..1000 {
            assert_ne!(t.sample(&mut rng), 2);
        }
    }

    #[test]
    fn star_center_frequencies_pass_chi_square() {
        // center 0, leaves 1..=4; arrive from leaf 1
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let t = TransitionTables::build(&g, 0.4, 3.0);
        let table = t.table(&g, 1, 0);
        let probs = table.probabilities();
        let draws = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = seed::rng(2024);
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&o, &p)| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        // upper 1% point of chi-square with 3 degrees of freedom
        assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
    }
}
