//! Topology features from biased random walks.
//!
//! The pipeline is: second-order transition tables → walks → skip-gram with
//! negative sampling → all-ones rows for isolated nodes → per-row softmax.
//! [`topology_features`] runs all of it.

mod alias;
mod refine;
mod sgns;
mod walk;
mod wl;

pub use alias::{AliasTable, TransitionTables};
pub use refine::{fill_isolated, softmax_refine};
pub use sgns::{train_sgns, SgnsStats};
pub use walk::{generate_walks, walk_from, WalkSet};
pub use wl::{wl_distinguishes, wl_vs_walk_check, WlWalkReport};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::{read_f32_le, read_json, write_f32_le, write_json};

/// Dense `n × embedding_dim` topology features.
pub type EmbeddingMatrix = DenseMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walks_per_node: usize,
    /// Nodes per walk, start included.
    pub walk_length: usize,
    pub window: usize,
    pub embedding_dim: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// SGNS threads. Anything above 1 is lock-free and not reproducible.
    pub workers: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            embedding_dim: 128,
            negatives_per_positive: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            workers: 1,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("walk config: {m}")));
        if !(self.p > 0.0 && self.q > 0.0) {
            return bad("p and q must be positive");
        }
        if self.walk_length < 2 {
            return bad("walk_length must be >= 2");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.embedding_dim < 1 {
            return bad("embedding_dim must be >= 1");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    /// Stable short hash used as an embedding cache key.
    pub fn cache_key(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Full pipeline from a graph (without self-loops) to refined features.
pub fn topology_features(g: &Graph, cfg: &WalkConfig) -> Result<(EmbeddingMatrix, SgnsStats)> {
    cfg.validate()?;
    let g = g.without_self_loops();
    let n = g.num_nodes();
    let tables = TransitionTables::build(&g, cfg.p, cfg.q);
    let walks = generate_walks(&g, &tables, cfg);
    let (raw, stats) = if walks.is_empty() {
        (
            DenseMatrix::zeros(n, cfg.embedding_dim),
            SgnsStats { epoch_loss: vec![] },
        )
    } else {
        train_sgns(&walks, cfg, n)?
    };
    Ok((softmax_refine(&fill_isolated(&g, &raw)), stats))
}

#[derive(Serialize, Deserialize)]
struct EmbeddingMeta {
    num_nodes: usize,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    walk_config: Option<WalkConfig>,
}

/// Writes `meta.json` and `embedding.bin` (row-major little-endian f32).
pub fn save_embedding(e: &EmbeddingMatrix, cfg: Option<&WalkConfig>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    write_json(
        &dir.join("meta.json"),
        &EmbeddingMeta {
            num_nodes: e.rows(),
            dim: e.cols(),
            walk_config: cfg.cloned(),
        },
    )?;
    let data: Vec<f32> = e.data().iter().map(|&v| v as f32).collect();
    write_f32_le(&dir.join("embedding.bin"), &data)
}

pub fn load_embedding(dir: &Path) -> Result<EmbeddingMatrix> {
    let meta: EmbeddingMeta = read_json(&dir.join("meta.json"))?;
    let data = read_f32_le(&dir.join("embedding.bin"), meta.num_nodes * meta.dim)?;
    DenseMatrix::from_vec(
        meta.num_nodes,
        meta.dim,
        data.into_iter().map(f64::from).collect(),
    )
}
