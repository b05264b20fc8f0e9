//! Branch networks and the dual model.
//!
//! A branch maps node inputs to an `n × hidden` representation with one of
//! three propagation backends. The dual model runs two branches with the
//! same architecture but separate parameters: the init branch over the
//! original features, the topo branch over topology features. Only the init
//! branch feeds the classifier.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Matrix};
use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::nn::{ParamId, ParamStore, Tape, Var};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Gcn,
    Appnp,
    Gcnii,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub backend: Backend,
    pub hidden: usize,
    /// APPNP steps or GCNII layers. Unused by GCN.
    pub propagation_steps: usize,
    /// Teleport weight toward the encoded input.
    pub alpha: f64,
    pub gcnii_lambda: f64,
    pub dropout: f64,
    /// Apply ReLU after every APPNP step. `false` gives plain APPNP.
    pub appnp_relu: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Gcn,
            hidden: 64,
            propagation_steps: 10,
            alpha: 0.1,
            gcnii_lambda: 0.5,
            dropout: 0.5,
            appnp_relu: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("model config: {m}")));
        if self.hidden == 0 {
            return bad("hidden must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.backend == Backend::Gcnii {
            if self.propagation_steps == 0 {
                return bad("gcnii needs at least one layer".into());
            }
            if self.gcnii_lambda.is_nan() || self.gcnii_lambda <= 0.0 {
                return bad("gcnii_lambda must be positive".into());
            }
        }
        Ok(())
    }
}

/// Output pair of the two branches.
#[derive(Clone, Copy, Debug)]
pub struct DualOutputs {
    pub h_init: Var,
    pub h_topo: Var,
}

/// Parameter ids of one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchParams {
    /// GCN layer weights, or the two MLP encoder weights.
    pub encoder: [ParamId; 2],
    /// GCNII per-layer weights; empty otherwise.
    pub layers: Vec<ParamId>,
}

/// A branch's parameters recorded on a tape.
#[derive(Clone, Debug)]
pub struct BranchVars {
    pub encoder: [Var; 2],
    pub layers: Vec<Var>,
}

impl BranchParams {
    pub fn record<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>) -> BranchVars {
        BranchVars {
            encoder: [
                tape.param(store, self.encoder[0]),
                tape.param(store, self.encoder[1]),
            ],
            layers: self
                .layers
                .iter()
                .map(|&id| tape.param(store, id))
                .collect(),
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.encoder.iter().chain(&self.layers).copied()
    }
}

/// Glorot-uniform matrix drawn from a generator seeded by `(seed, name)`.
pub fn glorot<T: Scalar>(rows: usize, cols: usize, seed: u64, name: &str) -> Matrix<T> {
    let r = (6.0 / (rows + cols) as f64).sqrt();
    let mut rng = seed::rng(seed::derive_str(seed, name));
    Matrix::from_fn(rows, cols, |_, _| T::from_f64(rng.random_range(-r..r)))
}

/// Adds one branch's parameters under `prefix`. Each matrix is initialised
/// from its own name, so a branch starts identically whatever else is in
/// the store.
pub fn add_branch<T: Scalar>(
    store: &mut ParamStore<T>,
    cfg: &ModelConfig,
    prefix: &str,
    din: usize,
    seed: u64,
    layer_decay: Option<f64>,
) -> BranchParams {
    let h = cfg.hidden;
    let mut add = |name: String, r, c, decay: Option<f64>| {
        let m = glorot(r, c, seed, &name);
        store.add_with_decay(name, m, decay)
    };
    let encoder = [
        add(format!("{prefix}.w0"), din, h, None),
        add(format!("{prefix}.w1"), h, h, None),
    ];
    let layers = match cfg.backend {
        Backend::Gcnii => (1..=cfg.propagation_steps)
            .map(|l| add(format!("{prefix}.conv{l}"), h, h, layer_decay))
            .collect(),
        _ => Vec::new(),
    };
    BranchParams { encoder, layers }
}

/// `linear → relu → dropout → linear`.
pub fn mlp_encode<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    w: [Var; 2],
    dropout: f64,
    dropout_seed: u64,
) -> Result<Var> {
    let h = tape.matmul(x, w[0])?;
    let h = tape.relu(h);
    let h = tape.dropout(h, dropout, dropout_seed)?;
    tape.matmul(h, w[1])
}

/// Two graph-convolution layers: `relu(Â X W0) → dropout → Â H W1`.
pub fn gcn_forward<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &Arc<SparseMatrix>,
    x: Var,
    w: [Var; 2],
    dropout: f64,
    dropout_seed: u64,
) -> Result<Var> {
    let xw = tape.matmul(x, w[0])?;
    let h = tape.spmm(adj, xw)?;
    let h = tape.relu(h);
    let h = tape.dropout(h, dropout, dropout_seed)?;
    let hw = tape.matmul(h, w[1])?;
    tape.spmm(adj, hw)
}

/// `K` steps of `H ← ReLU((1−α) Â H + α H⁰)`, the ReLU optional.
pub fn appnp_forward<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &Arc<SparseMatrix>,
    h0: Var,
    k: usize,
    alpha: f64,
    relu: bool,
) -> Result<Var> {
    let teleport = tape.scale(h0, T::from_f64(alpha));
    let mut h = h0;
    for _ in 0..k {
        let p = tape.spmm(adj, h)?;
        let p = tape.scale(p, T::from_f64(1.0 - alpha));
        h = tape.add(p, teleport)?;
        if relu {
            h = tape.relu(h);
        }
    }
    Ok(h)
}

/// `β_ℓ = ln(λ/ℓ + 1)` for layer `ℓ ≥ 1`.
pub fn gcnii_beta(lambda: f64, layer: usize) -> f64 {
    (lambda / layer as f64 + 1.0).ln()
}

/// GCNII layers: `H ← relu(S((1−β_ℓ)I + β_ℓ W_ℓ))` with
/// `S = (1−α) Â H + α H⁰`, dropout applied to `H` before each layer.
pub fn gcnii_forward<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &Arc<SparseMatrix>,
    h0: Var,
    layers: &[Var],
    cfg: &ModelConfig,
    dropout_seed: u64,
) -> Result<Var> {
    let teleport = tape.scale(h0, T::from_f64(cfg.alpha));
    let mut h = h0;
    for (i, &w) in layers.iter().enumerate() {
        let beta = gcnii_beta(cfg.gcnii_lambda, i + 1);
        let hd = tape.dropout(h, cfg.dropout, seed::derive(dropout_seed, i as u64 + 1))?;
        let p = tape.spmm(adj, hd)?;
        let p = tape.scale(p, T::from_f64(1.0 - cfg.alpha));
        let s = tape.add(p, teleport)?;
        let sw = tape.matmul(s, w)?;
        let sw = tape.scale(sw, T::from_f64(beta));
        let keep = tape.scale(s, T::from_f64(1.0 - beta));
        let sum = tape.add(keep, sw)?;
        h = tape.relu(sum);
    }
    Ok(h)
}

/// One branch, dispatched on `cfg.backend`.
pub fn branch_forward<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &Arc<SparseMatrix>,
    x: Var,
    vars: &BranchVars,
    cfg: &ModelConfig,
    dropout_seed: u64,
) -> Result<Var> {
    let enc_seed = seed::derive(dropout_seed, 0);
    match cfg.backend {
        Backend::Gcn => gcn_forward(tape, adj, x, vars.encoder, cfg.dropout, enc_seed),
        Backend::Appnp => {
            let h0 = mlp_encode(tape, x, vars.encoder, cfg.dropout, enc_seed)?;
            appnp_forward(
                tape,
                adj,
                h0,
                cfg.propagation_steps,
                cfg.alpha,
                cfg.appnp_relu,
            )
        }
        Backend::Gcnii => {
            let h0 = mlp_encode(tape, x, vars.encoder, cfg.dropout, enc_seed)?;
            gcnii_forward(tape, adj, h0, &vars.layers, cfg, dropout_seed)
        }
    }
}

/// Both branches. Each branch draws dropout masks from its own stream, keyed
/// by `label`, so the init branch sees the same masks with or without the
/// topo branch.
#[allow(clippy::too_many_arguments)]
pub fn dual_forward<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &Arc<SparseMatrix>,
    x_init: Var,
    x_topo: Var,
    init: &BranchVars,
    topo: &BranchVars,
    cfg: &ModelConfig,
    pass_seed: u64,
) -> Result<DualOutputs> {
    let hi = init.encoder[1].shape().1;
    let ht = topo.encoder[1].shape().1;
    if hi != ht {
        return Err(Error::shape("dual_forward hidden size", hi, ht));
    }
    let h_init = branch_forward(
        tape,
        adj,
        x_init,
        init,
        cfg,
        seed::derive_str(pass_seed, "init"),
    )?;
    let h_topo = branch_forward(
        tape,
        adj,
        x_topo,
        topo,
        cfg,
        seed::derive_str(pass_seed, "topo"),
    )?;
    Ok(DualOutputs { h_init, h_topo })
}

/// Full model: the init branch, an optional topo branch and a linear
/// classifier on the init branch output.
#[derive(Clone, Debug)]
pub struct DualModel {
    pub cfg: ModelConfig,
    pub init: BranchParams,
    pub topo: Option<BranchParams>,
    pub classifier: ParamId,
}

/// Tape outputs of [`DualModel::forward`].
#[derive(Clone, Copy, Debug)]
pub struct ForwardOut {
    pub h_init: Var,
    pub h_topo: Option<Var>,
    pub logits: Var,
}

impl DualModel {
    /// Registers all parameters in `store`. `layer_decay` overrides weight
    /// decay on GCNII layer weights.
    pub fn build<T: Scalar>(
        store: &mut ParamStore<T>,
        cfg: &ModelConfig,
        din_init: usize,
        din_topo: Option<usize>,
        num_classes: usize,
        seed: u64,
        layer_decay: Option<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        let init = add_branch(store, cfg, "init", din_init, seed, layer_decay);
        let topo = din_topo.map(|d| add_branch(store, cfg, "topo", d, seed, layer_decay));
        let classifier = store.add(
            "classifier",
            glorot(cfg.hidden, num_classes, seed, "classifier"),
        );
        Ok(Self {
            cfg: cfg.clone(),
            init,
            topo,
            classifier,
        })
    }

    /// Forward pass. `x_topo` is required iff the model has a topo branch.
    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        adj: &Arc<SparseMatrix>,
        x_init: Var,
        x_topo: Option<Var>,
        pass_seed: u64,
    ) -> Result<ForwardOut> {
        let init = self.init.record(tape, store);
        let (h_init, h_topo) = match (&self.topo, x_topo) {
            (Some(tp), Some(xt)) => {
                let topo = tp.record(tape, store);
                let out = dual_forward(tape, adj, x_init, xt, &init, &topo, &self.cfg, pass_seed)?;
                (out.h_init, Some(out.h_topo))
            }
            (None, None) => {
                let s = seed::derive_str(pass_seed, "init");
                (
                    branch_forward(tape, adj, x_init, &init, &self.cfg, s)?,
                    None,
                )
            }
            _ => return Err(Error::Config("topo input must match topo branch".into())),
        };
        let w = tape.param(store, self.classifier);
        let logits = tape.matmul(h_init, w)?;
        Ok(ForwardOut {
            h_init,
            h_topo,
            logits,
        })
    }
}

/// Row-wise softmax of `h W`.
pub fn predict(h: &DenseMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    let mut z = h.matmul(w)?;
    for i in 0..z.rows() {
        let row = z.row_mut(i);
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    Ok(z)
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows<T: Scalar>(m: &Matrix<T>) -> Vec<usize> {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use nalgebra::DMatrix;

    fn graph10() -> Graph {
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 0),
            (5, 6),
            (6, 7),
            (7, 8),
            (8, 9),
            (9, 5),
            (0, 5),
            (2, 7),
            (1, 8),
        ];
        Graph::from_edges(10, &edges).unwrap().add_self_loops()
    }

    fn adj(g: &Graph) -> Arc<SparseMatrix> {
        Arc::new(SparseMatrix::normalize_sym(g).unwrap())
    }

    fn nal(m: &DenseMatrix) -> DMatrix<f64> {
        DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
    }

    fn relu(m: DMatrix<f64>) -> DMatrix<f64> {
        m.map(|v| v.max(0.0))
    }

    fn cfg(backend: Backend, k: usize) -> ModelConfig {
        ModelConfig {
            backend,
            hidden: 6,
            propagation_steps: k,
            alpha: 0.2,
            dropout: 0.0,
            ..ModelConfig::default()
        }
    }

    fn features(n: usize, d: usize, s: u64) -> DenseMatrix {
        glorot(n, d, s, "x")
    }

    fn run(backend: Backend, k: usize) -> (DenseMatrix, ParamStore<f64>, BranchParams) {
        let g = graph10();
        let a = adj(&g);
        let c = cfg(backend, k);
        let mut store = ParamStore::new();
        let bp = add_branch(&mut store, &c, "init", 5, 9, None);
        let mut tape = Tape::new(false);
        let x = tape.constant(features(10, 5, 1));
        let vars = bp.record(&mut tape, &store);
        let out = branch_forward(&mut tape, &a, x, &vars, &c, 0).unwrap();
        (tape.value(out).clone(), store, bp)
    }

    #[test]
    fn gcn_matches_dense_oracle() {
        let (out, store, bp) = run(Backend::Gcn, 0);
        let a = nal(&adj(&graph10()).to_dense());
        let x = nal(&features(10, 5, 1));
        let w0 = nal(store.value(bp.encoder[0]));
        let w1 = nal(store.value(bp.encoder[1]));
        let want = &a * relu(&a * &x * &w0) * &w1;
        assert_eq!(out.shape(), (10, 6));
        assert!((nal(&out) - want).amax() < 1e-12);
    }

    #[test]
    fn appnp_matches_dense_oracle() {
        let (out, store, bp) = run(Backend::Appnp, 4);
        let a = nal(&adj(&graph10()).to_dense());
        let x = nal(&features(10, 5, 1));
        let h0 = relu(&x * nal(store.value(bp.encoder[0]))) * nal(store.value(bp.encoder[1]));
        let mut h = h0.clone();
        for _ in 0..4 {
            h = relu(&a * &h * 0.8 + &h0 * 0.2);
        }
        assert!((nal(&out) - h).amax() < 1e-12);
    }

    #[test]
    fn gcnii_matches_dense_oracle() {
        let (out, store, bp) = run(Backend::Gcnii, 3);
        let a = nal(&adj(&graph10()).to_dense());
        let x = nal(&features(10, 5, 1));
        let h0 = relu(&x * nal(store.value(bp.encoder[0]))) * nal(store.value(bp.encoder[1]));
        let mut h = h0.clone();
        for (l, &id) in bp.layers.iter().enumerate() {
            let beta = (0.5 / (l + 1) as f64 + 1.0).ln();
            let s = &a * &h * 0.8 + &h0 * 0.2;
            let m = DMatrix::identity(6, 6) * (1.0 - beta) + nal(store.value(id)) * beta;
            h = relu(s * m);
        }
        assert!((nal(&out) - h).amax() < 1e-12);
    }

    #[test]
    fn gcn_single_self_loop_node() {
        let g = Graph::from_edges(1, &[]).unwrap().add_self_loops();
        let a = adj(&g);
        let c = cfg(Backend::Gcn, 0);
        let mut store = ParamStore::new();
        let bp = add_branch(&mut store, &c, "init", 3, 4, None);
        let mut tape = Tape::new(false);
        let xm = features(1, 3, 2);
        let x = tape.constant(xm.clone());
        let vars = bp.record(&mut tape, &store);
        let out = branch_forward(&mut tape, &a, x, &vars, &c, 0).unwrap();
        let want = nal(&xm) * nal(store.value(bp.encoder[0]));
        let want = relu(want) * nal(store.value(bp.encoder[1]));
        assert!((nal(tape.value(out)) - want).amax() < 1e-14);
    }

    #[test]
    fn mlp_zero_second_layer_gives_zero() {
        let mut tape = Tape::<f64>::new(false);
        let x = tape.constant(features(4, 3, 3));
        let w0 = tape.constant(glorot(3, 5, 1, "w0"));
        let w1 = tape.constant(Matrix::zeros(5, 5));
        let out = mlp_encode(&mut tape, x, [w0, w1], 0.0, 0).unwrap();
        assert_eq!(out.shape(), (4, 5));
        assert!(tape.value(out).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn appnp_k0_and_alpha1() {
        let a = adj(&graph10());
        let mut tape = Tape::<f64>::new(false);
        let h0m = features(10, 4, 5).map(f64::abs);
        let h0 = tape.constant(h0m.clone());
        let same = appnp_forward(&mut tape, &a, h0, 0, 0.3, true).unwrap();
        assert_eq!(tape.value(same), &h0m);
        for k in [1, 5, 20] {
            let out = appnp_forward(&mut tape, &a, h0, k, 1.0, true).unwrap();
            assert_eq!(tape.value(out), &h0m);
        }
    }

    #[test]
    fn appnp_without_teleport_oversmooths() {
        use crate::graph::{oversmooth_residual, Propagation};
        let g = graph10();
        let a = adj(&g);
        let mut tape = Tape::<f64>::new(false);
        let h0 = tape.constant(features(10, 4, 6));
        let mut last = f64::INFINITY;
        for k in [1, 2, 4, 8, 16, 32, 64] {
            let out = appnp_forward(&mut tape, &a, h0, k, 0.0, false).unwrap();
            let r = oversmooth_residual(tape.value(out), &g, Propagation::Sym, 1000, 0).unwrap();
            assert!(r < last, "k={k}: {r} !< {last}");
            last = r;
        }
        assert!(last < 1e-3, "{last}");
    }

    #[test]
    fn gcnii_tiny_lambda_is_relu_of_input() {
        let a = adj(&graph10());
        let c = ModelConfig {
            alpha: 1.0,
            gcnii_lambda: 1e-12,
            ..cfg(Backend::Gcnii, 1)
        };
        let mut tape = Tape::<f64>::new(false);
        let h0m = features(10, 6, 7);
        let h0 = tape.constant(h0m.clone());
        let w = tape.constant(Matrix::identity(6));
        let out = gcnii_forward(&mut tape, &a, h0, &[w], &c, 0).unwrap();
        assert!(tape.value(out).max_abs_diff(&h0m.map(|v| v.max(0.0))) < 1e-10);
        let w = tape.constant(glorot(6, 6, 2, "w"));
        let out = gcnii_forward(&mut tape, &a, h0, &[w], &c, 0).unwrap();
        assert!(tape.value(out).max_abs_diff(&h0m.map(|v| v.max(0.0))) < 1e-10);
    }

    #[test]
    fn gcnii_64_layers_shape() {
        let (out, _, _) = run(Backend::Gcnii, 64);
        assert_eq!(out.shape(), (10, 6));
        assert!(out.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn copied_branches_agree_exactly() {
        let g = graph10();
        let a = adj(&g);
        let c = cfg(Backend::Appnp, 3);
        let mut store = ParamStore::<f64>::new();
        let init = add_branch(&mut store, &c, "init", 5, 1, None);
        let topo = add_branch(&mut store, &c, "topo", 5, 1, None);
        for (i, t) in init.ids().zip(topo.ids()).collect::<Vec<_>>() {
            *store.value_mut(t) = store.value(i).clone();
        }
        let mut tape = Tape::new(false);
        let x = tape.constant(features(10, 5, 1));
        let vi = init.record(&mut tape, &store);
        let vt = topo.record(&mut tape, &store);
        let out = dual_forward(&mut tape, &a, x, x, &vi, &vt, &c, 3).unwrap();
        assert_eq!(tape.value(out.h_init), tape.value(out.h_topo));
    }

    #[test]
    fn gradients_reach_both_branches() {
        let g = graph10();
        let a = adj(&g);
        let c = ModelConfig {
            dropout: 0.3,
            ..cfg(Backend::Gcn, 0)
        };
        let mut store = ParamStore::<f64>::new();
        let model = DualModel::build(&mut store, &c, 5, Some(3), 2, 0, None).unwrap();
        let mut tape = Tape::new(true);
        let xi = tape.constant(features(10, 5, 1));
        let xt = tape.constant(features(10, 3, 2));
        let out = model
            .forward(&mut tape, &store, &a, xi, Some(xt), 0)
            .unwrap();
        let d = tape.sub(out.h_init, out.h_topo.unwrap()).unwrap();
        let sq = tape.square(d);
        let loss = tape.reduce_sum(sq);
        let grads = tape.backward(loss).unwrap().for_params(&store);
        for id in model.init.ids().chain(model.topo.as_ref().unwrap().ids()) {
            assert!(grads[id.index()].data().iter().any(|&v| v != 0.0));
        }
        assert!(grads[model.classifier.index()]
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_hidden_sizes_rejected() {
        let a = adj(&graph10());
        let mut store = ParamStore::<f64>::new();
        let init = add_branch(&mut store, &cfg(Backend::Gcn, 0), "init", 5, 0, None);
        let wide = ModelConfig {
            hidden: 7,
            ..cfg(Backend::Gcn, 0)
        };
        let topo = add_branch(&mut store, &wide, "topo", 5, 0, None);
        let mut tape = Tape::new(false);
        let x = tape.constant(features(10, 5, 1));
        let vi = init.record(&mut tape, &store);
        let vt = topo.record(&mut tape, &store);
        assert!(dual_forward(&mut tape, &a, x, x, &vi, &vt, &cfg(Backend::Gcn, 0), 0).is_err());
    }

    #[test]
    fn predict_rows_and_ties() {
        let h = features(5, 3, 1);
        let z = predict(&h, &DenseMatrix::zeros(3, 4)).unwrap();
        for i in 0..5 {
            for &v in z.row(i) {
                assert!((v - 0.25).abs() < 1e-15);
            }
        }
        assert_eq!(argmax_rows(&z), vec![0; 5]);
        let z = predict(&h, &glorot(3, 4, 2, "w")).unwrap();
        for i in 0..5 {
            assert!((z.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let m = DenseMatrix::from_rows(&[vec![0.1, 0.7, 0.7], vec![0.5, 0.2, 0.5]]).unwrap();
        assert_eq!(argmax_rows(&m), vec![1, 0]);
    }
}
