//! Skip-gram with negative sampling over node sequences.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU32, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::alias::AliasTable;
use super::walk::WalkSet;
use super::WalkConfig;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::seed;

/// Per-epoch mean of the SGNS loss `−log σ(u·v) − Σ log σ(−u·v′)` over all
/// (center, context) pairs of that epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnsStats {
    pub epoch_loss: Vec<f64>,
}

/// Row storage the update step reads from and writes to.
trait Rows {
    fn read(&self, row: usize, out: &mut [f32]);
    fn add(&self, row: usize, delta: &[f32]);
}

/// Storage for the deterministic single-worker path.
struct Plain(RefCell<Vec<f32>>, usize);

impl Rows for Plain {
    fn read(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.0.borrow()[row * self.1..(row + 1) * self.1]);
    }
    fn add(&self, row: usize, delta: &[f32]) {
        let mut v = self.0.borrow_mut();
        for (x, d) in v[row * self.1..(row + 1) * self.1].iter_mut().zip(delta) {
            *x += d;
        }
    }
}

/// Lock-free storage for the multi-worker path. Concurrent updates to the
/// same row may overwrite each other, so results depend on scheduling.
struct Racy(Vec<AtomicU32>, usize);

impl Rows for Racy {
    fn read(&self, row: usize, out: &mut [f32]) {
        for (o, a) in out
            .iter_mut()
            .zip(&self.0[row * self.1..(row + 1) * self.1])
        {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }
    fn add(&self, row: usize, delta: &[f32]) {
        for (a, d) in self.0[row * self.1..(row + 1) * self.1].iter().zip(delta) {
            let v = f32::from_bits(a.load(Ordering::Relaxed)) + d;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Trainer<'a, R: Rows> {
    input: &'a R,
    output: &'a R,
    noise: &'a AliasTable,
    cfg: &'a WalkConfig,
    dim: usize,
}

impl<R: Rows> Trainer<'_, R> {
    /// Trains on one walk; returns (summed loss, pair count).
    fn walk(&self, walk: &[usize], lr: f32, rng: &mut ChaCha8Rng) -> (f64, usize) {
        let dim = self.dim;
        let mut u = vec![0f32; dim];
        let mut v = vec![0f32; dim];
        let mut neu = vec![0f32; dim];
        let mut dv = vec![0f32; dim];
        let (mut loss, mut pairs) = (0.0f64, 0usize);
        for (pos, &center) in walk.iter().enumerate() {
            // word2vec-style shrunk window
            let span = self.cfg.window - rng.random_range(0..self.cfg.window);
            let lo = pos.saturating_sub(span);
            let hi = (pos + span).min(walk.len() - 1);
            for (cpos, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if cpos == pos {
                    continue;
                }
                self.input.read(center, &mut u);
                neu.fill(0.0);
                for k in 0..=self.cfg.negatives_per_positive {
                    let (target, label) = if k == 0 {
                        (context, 1.0f32)
                    } else {
                        let t = self.noise.sample(rng);
                        if t == context {
                            continue;
                        }
                        (t, 0.0)
                    };
                    self.output.read(target, &mut v);
                    let f = sigmoid(dot(&u, &v));
                    loss -= if label > 0.0 {
                        (f.max(1e-7) as f64).ln()
                    } else {
                        ((1.0 - f).max(1e-7) as f64).ln()
                    };
                    let g = (label - f) * lr;
                    for i in 0..dim {
                        neu[i] += g * v[i];
                        dv[i] = g * u[i];
                    }
                    self.output.add(target, &dv);
                }
                self.input.add(center, &neu);
                pairs += 1;
            }
        }
        (loss, pairs)
    }
}

/// Trains center-role embeddings on `walks` and returns them with the
/// per-epoch loss trace. The learning rate decays linearly from
/// `cfg.learning_rate` to `1e-4 ×` that value over all epochs.
///
/// With `cfg.workers == 1` (the default) training is sequential and
/// bit-reproducible. More workers run lock-free and are not reproducible.
pub fn train_sgns(walks: &WalkSet, cfg: &WalkConfig, n: usize) -> Result<(DenseMatrix, SgnsStats)> {
    if walks.is_empty() {
        return Err(Error::Config("no walks to train on".into()));
    }
    cfg.validate()?;
    let dim = cfg.embedding_dim;

    let mut counts = vec![0f64; n];
    for w in &walks.walks {
        for &v in w {
            if v >= n {
                return Err(Error::shape("train_sgns", format!("node < {n}"), v));
            }
            counts[v] += 1.0;
        }
    }
    let noise = AliasTable::new(&counts.iter().map(|c| c.powf(0.75)).collect::<Vec<_>>());

    let mut init_rng = seed::rng(seed::derive(cfg.seed, 0x5347_4e53));
    let syn0: Vec<f32> = (0..n * dim)
        .map(|_| (init_rng.random::<f32>() - 0.5) / dim as f32)
        .collect();

    let total = (walks.len() * cfg.epochs) as f64;
    let lr0 = cfg.learning_rate as f32;
    let lr_at = |done: usize| (lr0 * (1.0 - done as f64 / total) as f32).max(lr0 * 1e-4);
    let mut stats = SgnsStats {
        epoch_loss: Vec::with_capacity(cfg.epochs),
    };

    let out = if cfg.workers <= 1 {
        let input = Plain(RefCell::new(syn0), dim);
        let output = Plain(RefCell::new(vec![0f32; n * dim]), dim);
        let trainer = Trainer {
            input: &input,
            output: &output,
            noise: &noise,
            cfg,
            dim,
        };
        let mut rng = seed::rng(seed::derive(cfg.seed, 0x7261_6e64));
        for epoch in 0..cfg.epochs {
            let (mut loss, mut pairs) = (0.0, 0);
            for (i, w) in walks.walks.iter().enumerate() {
                let (l, p) = trainer.walk(w, lr_at(epoch * walks.len() + i), &mut rng);
                loss += l;
                pairs += p;
            }
            stats.epoch_loss.push(loss / pairs.max(1) as f64);
        }
        input.0.into_inner()
    } else {
        let input = Racy(
            syn0.into_iter()
                .map(|v| AtomicU32::new(v.to_bits()))
                .collect(),
            dim,
        );
        let output = Racy((0..n * dim).map(|_| AtomicU32::new(0)).collect(), dim);
        let trainer = Trainer {
            input: &input,
            output: &output,
            noise: &noise,
            cfg,
            dim,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        for epoch in 0..cfg.epochs {
            let (loss, pairs) = pool.install(|| {
                walks
                    .walks
                    .par_iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let mut rng =
                            seed::rng(seed::derive(seed::derive(cfg.seed, epoch as u64), i as u64));
                        trainer.walk(w, lr_at(epoch * walks.len() + i), &mut rng)
                    })
                    .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
            });
            stats.epoch_loss.push(loss / pairs.max(1) as f64);
        }
        input
            .0
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect()
    };

    let emb = DenseMatrix::from_vec(n, dim, out.into_iter().map(f64::from).collect())?;
    Ok((emb, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::node2vec::{generate_walks, TransitionTables};

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        d / (na * nb)
    }

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 10] {
            for i in 0..10 {
                for j in i + 1..10 {
                    edges.push((base + i, base + j));
                }
            }
        }
        Graph::from_edges(20, &edges).unwrap()
    }

    fn small_cfg() -> WalkConfig {
        WalkConfig {
            embedding_dim: 16,
            walks_per_node: 10,
            walk_length: 20,
            window: 4,
            epochs: 5,
            seed: 11,
            ..WalkConfig::default()
        }
    }

    #[test]
    fn shape_and_clique_separation() {
        let g = two_cliques();
        let cfg = small_cfg();
        let t = TransitionTables::build(&g, cfg.p, cfg.q);
        let walks = generate_walks(&g, &t, &cfg);
        let (emb, stats) = train_sgns(&walks, &cfg, 20).unwrap();
        assert_eq!(emb.shape(), (20, 16));

        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for i in 0..20 {
            for j in i + 1..20 {
                let c = cosine(emb.row(i), emb.row(j));
                if (i < 10) == (j < 10) {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        let (intra, inter) = (intra / ni as f64, inter / nx as f64);
        assert!(intra > inter, "intra {intra} inter {inter}");
        assert!(
            stats.epoch_loss.last().unwrap() < &stats.epoch_loss[0],
            "{stats:?}"
        );
    }

    #[test]
    fn single_worker_is_deterministic() {
        let g = two_cliques();
        let cfg = small_cfg();
        let t = TransitionTables::build(&g, cfg.p, cfg.q);
        let walks = generate_walks(&g, &t, &cfg);
        let a = train_sgns(&walks, &cfg, 20).unwrap();
        let b = train_sgns(&walks, &cfg, 20).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multi_worker_runs() {
        let g = two_cliques();
        let cfg = WalkConfig {
            workers: 3,
            ..small_cfg()
        };
        let t = TransitionTables::build(&g, cfg.p, cfg.q);
        let walks = generate_walks(&g, &t, &cfg);
        let (emb, stats) = train_sgns(&walks, &cfg, 20).unwrap();
        assert_eq!(emb.shape(), (20, 16));
        assert!(stats.epoch_loss.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn empty_walks_rejected() {
        let walks = WalkSet { walks: vec![] };
        assert!(train_sgns(&walks, &small_cfg(), 5).is_err());
    }
}
