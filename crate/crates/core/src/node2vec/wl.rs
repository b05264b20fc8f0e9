//! 1-WL color refinement against random-walk transition matrices.

use std::collections::HashMap;

use serde::Serialize;

use crate::dense::DenseMatrix;
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WlWalkReport {
    /// Color histograms differ after some round `1..=k`.
    pub wl_distinguishes: bool,
    /// The multisets of per-node transition profiles differ for some
    /// `P^t`, `t = 1..=k`.
    pub walk_matrices_differ: bool,
}

impl WlWalkReport {
    /// `wl_distinguishes ⇒ walk_matrices_differ`.
    pub fn implication_holds(&self) -> bool {
        !self.wl_distinguishes || self.walk_matrices_differ
    }
}

/// Runs `k` rounds of 1-WL refinement on both graphs with a shared color
/// dictionary, and compares first-order walk matrices `P = D^{-1} A` up to
/// node relabelling: each node is summarized by its sorted rows of
/// `P^1..P^k`, and the two multisets of summaries are compared.
pub fn wl_vs_walk_check(g1: &Graph, g2: &Graph, k: usize) -> WlWalkReport {
    assert_eq!(
        g1.num_nodes(),
        g2.num_nodes(),
        "graphs must have the same node count"
    );
    let (p1, p2) = walk_profiles_pair(g1, g2, k);
    WlWalkReport {
        wl_distinguishes: wl_distinguishes(g1, g2, k),
        walk_matrices_differ: p1 != p2,
    }
}

/// True if some round `1..=k` of joint 1-WL refinement yields different
/// color histograms.
pub fn wl_distinguishes(g1: &Graph, g2: &Graph, k: usize) -> bool {
    let mut c1 = vec![0usize; g1.num_nodes()];
    let mut c2 = vec![0usize; g2.num_nodes()];
    for _ in 0..k {
        let mut dict: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let n1 = refine(g1, &c1, &mut dict);
        let n2 = refine(g2, &c2, &mut dict);
        c1 = n1;
        c2 = n2;
        if histogram(&c1) != histogram(&c2) {
            return true;
        }
    }
    false
}

fn refine(
    g: &Graph,
    colors: &[usize],
    dict: &mut HashMap<(usize, Vec<usize>), usize>,
) -> Vec<usize> {
    (0..g.num_nodes())
        .map(|i| {
            let mut nb: Vec<usize> = g
                .neighbors(i)
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| colors[j])
                .collect();
            nb.sort_unstable();
            let next = dict.len();
            *dict.entry((colors[i], nb)).or_insert(next)
        })
        .collect()
}

fn histogram(colors: &[usize]) -> Vec<usize> {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c
}

/// Sorted multiset of node summaries. Entries of `P^t` are compared exactly
/// as integers `L^t P^t`, with `L` the lcm of all degrees in both graphs.
/// If that overflows, probabilities are snapped to a 1e-9 grid instead.
fn walk_profiles_pair(g1: &Graph, g2: &Graph, k: usize) -> (Vec<Vec<u128>>, Vec<Vec<u128>>) {
    let (a1, a2) = (g1.without_self_loops(), g2.without_self_loops());
    let l = a1
        .degrees()
        .iter()
        .chain(a2.degrees())
        .filter(|&&d| d > 0)
        .fold(1u128, |l, &d| lcm(l, d as u128));
    match (exact_profiles(&a1, k, l), exact_profiles(&a2, k, l)) {
        (Some(p1), Some(p2)) => (p1, p2),
        _ => (float_profiles(&a1, k), float_profiles(&a2, k)),
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

fn exact_profiles(a: &Graph, k: usize, l: u128) -> Option<Vec<Vec<u128>>> {
    let n = a.num_nodes();
    let step: Vec<Vec<u128>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if a.has_edge(i, j) {
                        l / a.degree(i) as u128
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let mut pk = step.clone();
    let mut profiles: Vec<Vec<u128>> = vec![Vec::with_capacity(n * k); n];
    for t in 0..k {
        if t > 0 {
            let mut next = vec![vec![0u128; n]; n];
            for i in 0..n {
                for m in 0..n {
                    if pk[i][m] == 0 {
                        continue;
                    }
                    for j in 0..n {
                        let v = pk[i][m].checked_mul(step[m][j])?;
                        next[i][j] = next[i][j].checked_add(v)?;
                    }
                }
            }
            pk = next;
        }
        for (i, prof) in profiles.iter_mut().enumerate() {
            let mut row = pk[i].clone();
            row.sort_unstable();
            prof.extend(row);
        }
    }
    profiles.sort();
    Some(profiles)
}

fn float_profiles(a: &Graph, k: usize) -> Vec<Vec<u128>> {
    let n = a.num_nodes();
    let p = DenseMatrix::from_fn(n, n, |i, j| {
        if a.has_edge(i, j) {
            1.0 / a.degree(i) as f64
        } else {
            0.0
        }
    });
    let mut profiles: Vec<Vec<u128>> = vec![Vec::with_capacity(n * k); n];
    let mut pk = p.clone();
    for t in 0..k {
        if t > 0 {
            pk = pk.matmul(&p).expect("square");
        }
        for (i, prof) in profiles.iter_mut().enumerate() {
            let mut row: Vec<u128> = pk
                .row(i)
                .iter()
                .map(|v| (v * 1e9).round() as u128)
                .collect();
            row.sort_unstable();
            prof.extend(row);
        }
    }
    profiles.sort();
    profiles
}
