//! Times vanilla GCN training on a synthetic graph shaped like Cora
//! (2708 nodes, 7 classes, ~5.4k edges, 1433 binary bag-of-words features
//! with ~18 words per node), with the default preset: 10 seeds, up to 300
//! epochs.
//!
//! ```text
//! cargo run --release -p toporeg --example runtime_probe
//! ```

use std::time::Instant;

use rand::Rng;

use toporeg::dataset::generate_sbm;
use toporeg::models::Backend;
use toporeg::train::{train, AblationMode, TrainConfig};
use toporeg::{seed, DenseMatrix};

const VOCAB: usize = 1433;
const WORDS: usize = 18;

fn main() -> toporeg::Result<()> {
    // expected degree ~4: p_in·387 + p_out·2321 ≈ 4
    let mut bundle = generate_sbm(2708, 7, 0.0075, 0.0005, 1, 1.0, 0)?;
    // half of each node's words come from a class-specific slice
    let mut rng = seed::rng(1);
    let slice = VOCAB / 7;
    let mut x = DenseMatrix::zeros(bundle.num_nodes(), VOCAB);
    for i in 0..bundle.num_nodes() {
        let c = bundle.labels[i];
        for _ in 0..WORDS {
            let w = if rng.random::<bool>() {
                c * slice + rng.random_range(0..slice)
            } else {
                rng.random_range(0..VOCAB)
            };
            x.set(i, w, 1.0);
        }
    }
    bundle.features = x;
    println!(
        "{} nodes, {} edges",
        bundle.num_nodes(),
        bundle.graph.num_edges()
    );
    let mut cfg = TrainConfig::preset(Backend::Gcn);
    cfg.mode = AblationMode::Vanilla;
    let t = Instant::now();
    let out = train(&cfg, &bundle, None)?;
    let epochs: usize = out.report.runs.iter().map(|r| r.epochs_run).sum();
    println!(
        "{} seeds, {epochs} epochs, mean test accuracy {:.3}, {:.1} s on {} threads",
        out.report.runs.len(),
        out.report.mean_test_accuracy,
        t.elapsed().as_secs_f64(),
        rayon::current_num_threads()
    );
    Ok(())
}
