use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::alias::TransitionTables;
use super::WalkConfig;
use crate::graph::Graph;
use crate::seed;

/// Random walks, grouped by round: round `r` holds one walk per non-isolated
/// node, in a seeded node order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkSet {
    pub walks: Vec<Vec<usize>>,
}

impl WalkSet {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// One biased walk of `walk_length` nodes from `start`, drawn from a
/// generator seeded by `(seed, start, round)` only. `None` for isolated starts.
pub fn walk_from(
    g: &Graph,
    tables: &TransitionTables,
    start: usize,
    round: usize,
    cfg: &WalkConfig,
) -> Option<Vec<usize>> {
    if g.degree(start) == 0 {
        return None;
    }
    let mut rng = seed::rng(seed::derive(
        seed::derive(cfg.seed, start as u64),
        round as u64,
    ));
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let first = g.neighbors(start);
    walk.push(first[rng.random_range(0..first.len())]);
    while walk.len() < cfg.walk_length {
        let cur = walk[walk.len() - 1];
        let prev = walk[walk.len() - 2];
        let next = tables.table(g, prev, cur).sample(&mut rng);
        walk.push(g.neighbors(cur)[next]);
    }
    walk.truncate(cfg.walk_length);
    Some(walk)
}

/// `walks_per_node` walks from every non-isolated node. Walks are computed in
/// parallel but each depends only on `(seed, node, round)`, so the result is
/// the same for any thread count.
pub fn generate_walks(g: &Graph, tables: &TransitionTables, cfg: &WalkConfig) -> WalkSet {
    let n = g.num_nodes();
    let mut walks = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed::derive(
            cfg.seed ^ 0x5741_4c4b,
            round as u64,
        )));
        let batch: Vec<Option<Vec<usize>>> = order
            .par_iter()
            .map(|&s| walk_from(g, tables, s, round, cfg))
            .collect();
        walks.extend(batch.into_iter().flatten());
    }
    WalkSet { walks }
}
