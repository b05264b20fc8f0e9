//! Topology-regularized dual graph neural networks.
//!
//! A feature branch and a topology branch (over node2vec embeddings) are
//! trained together; the loss adds a term that pushes different nodes apart
//! and a term that keeps each node's two representations close. The crate
//! covers the whole pipeline on CPU: CSR graphs and normalized propagation,
//! a reverse-mode tape over dense matrices, node2vec, GCN/APPNP/GCNII
//! backbones, training with early stopping, and the experiment drivers
//! behind the `toporeg` binary.
//!
//! ```
//! use toporeg::dataset::generate_sbm;
//! use toporeg::models::Backend;
//! use toporeg::node2vec::{topology_features, WalkConfig};
//! use toporeg::train::{train, TrainConfig};
//!
//! let bundle = generate_sbm(120, 3, 0.15, 0.01, 6, 0.4, 0).unwrap();
//! let walk = WalkConfig { embedding_dim: 8, walks_per_node: 3, walk_length: 10, epochs: 1, ..Default::default() };
//! let (topo, _) = topology_features(&bundle.graph, &walk).unwrap();
//!
//! let mut cfg = TrainConfig::preset(Backend::Gcn);
//! cfg.row_normalize = false;
//! cfg.epochs = 30;
//! cfg.seeds = vec![0];
//! cfg.split.per_class_train = 5;
//! cfg.split.val_size = 30;
//! cfg.split.test_size = 50;
//! let out = train(&cfg, &bundle, Some(&topo)).unwrap();
//! assert!(out.report.runs[0].curve.iter().all(|e| e.sr.is_finite()));
//! ```

pub mod dataset;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod models;
pub mod nn;
pub mod node2vec;
pub mod pca;
pub mod reg;
pub mod scalar;
pub mod seed;
pub mod train;

pub use dense::{DenseMatrix, Matrix};
pub use error::{Error, ErrorKind, Result};
pub use graph::{Graph, Propagation, SparseMatrix};
pub use scalar::Scalar;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
