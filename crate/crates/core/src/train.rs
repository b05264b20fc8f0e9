//! Full-graph training with early stopping, evaluation and run reports.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{standard_split, DatasetBundle, SplitMask};
use crate::dense::{DenseMatrix, Matrix};
use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::models::{argmax_rows, Backend, DualModel, ForwardOut, ModelConfig};
use crate::nn::{AdamConfig, AdamState, ParamStore, Tape};
use crate::node2vec::WalkConfig;
use crate::reg::{cross_entropy, joint_loss, reg_loss, RegConfig};
use crate::scalar::Scalar;
use crate::seed;

/// Which inputs and regularizer terms a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Single branch over the original features.
    Vanilla,
    Sr,
    Dr,
    Srdr,
    /// Single branch over topology features only.
    TopoOnly,
    /// Single branch over original and topology features side by side.
    Concat,
}

impl AblationMode {
    pub const ALL: [AblationMode; 6] = [
        AblationMode::Vanilla,
        AblationMode::Sr,
        AblationMode::Dr,
        AblationMode::Srdr,
        AblationMode::TopoOnly,
        AblationMode::Concat,
    ];

    pub fn is_dual(self) -> bool {
        matches!(
            self,
            AblationMode::Sr | AblationMode::Dr | AblationMode::Srdr
        )
    }

    pub fn needs_topo(self) -> bool {
        !matches!(self, AblationMode::Vanilla)
    }

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::Vanilla => "vanilla",
            AblationMode::Sr => "sr",
            AblationMode::Dr => "dr",
            AblationMode::Srdr => "srdr",
            AblationMode::TopoOnly => "topo_only",
            AblationMode::Concat => "concat",
        }
    }

    /// Regularizer settings implied by the mode, keeping `lambda` and `epsilon`.
    pub fn reg_config(self, base: &RegConfig) -> RegConfig {
        let (use_sr, use_dr) = match self {
            AblationMode::Sr => (true, false),
            AblationMode::Dr => (false, true),
            AblationMode::Srdr => (true, true),
            _ => (false, false),
        };
        let lambda = if self.is_dual() { base.lambda } else { 0.0 };
        RegConfig {
            lambda,
            use_sr,
            use_dr,
            epsilon: base.epsilon,
        }
    }
}

/// Split used when the bundle has none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub per_class_train: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            per_class_train: 20,
            val_size: 500,
            test_size: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dataset: Option<PathBuf>,
    pub model: ModelConfig,
    pub reg: RegConfig,
    pub walk: WalkConfig,
    pub optimizer: AdamConfig,
    /// Weight decay for GCNII layer weights; `None` uses the optimizer's.
    pub layer_weight_decay: Option<f64>,
    pub epochs: usize,
    pub patience: usize,
    pub seeds: Vec<u64>,
    pub mode: AblationMode,
    pub row_normalize: bool,
    pub split: SplitConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::preset(Backend::Gcn)
    }
}

impl TrainConfig {
    /// Defaults for a backend.
    pub fn preset(backend: Backend) -> Self {
        let mut model = ModelConfig {
            backend,
            ..ModelConfig::default()
        };
        let mut optimizer = AdamConfig {
            lr: 0.01,
            weight_decay: 5e-4,
            ..AdamConfig::default()
        };
        let mut layer_weight_decay = None;
        match backend {
            Backend::Gcn => {}
            Backend::Appnp => {
                model.propagation_steps = 10;
                model.alpha = 0.1;
            }
            Backend::Gcnii => {
                model.propagation_steps = 64;
                model.alpha = 0.1;
                model.gcnii_lambda = 0.5;
                optimizer.weight_decay = 1e-4;
                layer_weight_decay = Some(5e-4);
            }
        }
        Self {
            dataset: None,
            model,
            reg: RegConfig::default(),
            walk: WalkConfig::default(),
            optimizer,
            layer_weight_decay,
            epochs: 300,
            patience: 100,
            seeds: (0..10).collect(),
            mode: AblationMode::Srdr,
            row_normalize: true,
            split: SplitConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.optimizer.lr.is_nan() || self.optimizer.lr <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        self.model.validate()?;
        self.mode.reg_config(&self.reg).validate()?;
        self.reg.validate()
    }
}

/// One epoch of training diagnostics. `sr`, `dr` and `reg_total` are the
/// unweighted regularizer values (zero for single-branch modes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub ce: f64,
    pub sr: f64,
    pub dr: f64,
    pub reg_total: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub test_accuracy: f64,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub curve: Vec<EpochRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oversmooth_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub mode: AblationMode,
    pub config: TrainConfig,
    /// Sorted by seed.
    pub runs: Vec<SeedReport>,
    pub mean_test_accuracy: f64,
    /// Population standard deviation over seeds.
    pub std_test_accuracy: f64,
}

impl RunReport {
    pub fn from_runs(dataset: &str, config: &TrainConfig, mut runs: Vec<SeedReport>) -> Self {
        runs.sort_by_key(|r| r.seed);
        let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
        let (mean, std) = mean_std(&accs);
        Self {
            dataset: dataset.to_string(),
            mode: config.mode,
            config: config.clone(),
            runs,
            mean_test_accuracy: mean,
            std_test_accuracy: std,
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.test_accuracy).collect()
    }
}

/// Wall-clock seconds, kept out of [`RunReport`] so reports stay
/// reproducible byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub per_seed_seconds: Vec<(u64, f64)>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Graph, inputs, labels and split in the form the model consumes.
#[derive(Clone, Debug)]
pub struct Prepared<T> {
    pub name: String,
    pub adj: Arc<SparseMatrix>,
    pub x_init: Arc<Matrix<T>>,
    pub x_topo: Option<Arc<Matrix<T>>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: SplitMask,
}

/// Builds model inputs for `cfg.mode`. `topo` is required by every mode
/// except vanilla.
pub fn prepare<T: Scalar>(
    cfg: &TrainConfig,
    bundle: &DatasetBundle,
    topo: Option<&DenseMatrix>,
) -> Result<Prepared<T>> {
    bundle.validate()?;
    let n = bundle.num_nodes();
    if let Some(t) = topo {
        if t.rows() != n {
            return Err(Error::shape("topology features rows", n, t.rows()));
        }
    }
    let topo = match (cfg.mode.needs_topo(), topo) {
        (true, None) => {
            return Err(Error::Config(format!(
                "mode {} needs topology features",
                cfg.mode.name()
            )))
        }
        (_, t) => t,
    };
    let x = if cfg.row_normalize {
        bundle.features.row_normalize_l1()
    } else {
        bundle.features.clone()
    };
    let (x_init, x_topo) = match cfg.mode {
        AblationMode::Vanilla => (x, None),
        AblationMode::TopoOnly => (topo.unwrap().clone(), None),
        AblationMode::Concat => (x.hstack(topo.unwrap())?, None),
        _ => (x, Some(topo.unwrap().clone())),
    };
    let split = match &bundle.splits {
        Some(s) => s.clone(),
        None => {
            let s = &cfg.split;
            standard_split(bundle, s.per_class_train, s.val_size, s.test_size, s.seed)?
        }
    };
    split.validate(n)?;
    let adj = SparseMatrix::normalize_sym(&bundle.graph.add_self_loops())?;
    Ok(Prepared {
        name: bundle.name.clone(),
        adj: Arc::new(adj),
        x_init: Arc::new(x_init.cast()),
        x_topo: x_topo.map(|t| Arc::new(t.cast())),
        labels: bundle.labels.clone(),
        num_classes: bundle.num_classes,
        split,
    })
}

/// A trained model with its (best-validation) parameters.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub seed: u64,
    pub model: DualModel,
    pub params: ParamStore<f32>,
}

impl TrainedModel {
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.params.save_checkpoint(dir)
    }

    /// Rebuilds the model for `cfg` and `data` and loads parameters from a
    /// checkpoint written by [`save`](Self::save).
    pub fn load(cfg: &TrainConfig, data: &Prepared<f32>, seed: u64, dir: &Path) -> Result<Self> {
        let (model, mut params) = build_model(cfg, data, seed)?;
        let loaded = ParamStore::<f32>::load_checkpoint(dir)?;
        if loaded.len() != params.len() {
            return Err(Error::shape(
                "checkpoint parameter count",
                params.len(),
                loaded.len(),
            ));
        }
        for (id, p) in params
            .ids()
            .collect::<Vec<_>>()
            .into_iter()
            .zip(loaded.iter())
        {
            let want = params.param(id);
            if want.name != p.name || want.value.shape() != p.value.shape() {
                return Err(Error::Parse {
                    file: dir.display().to_string(),
                    detail: format!("parameter {} does not match {}", p.name, want.name),
                });
            }
            *params.value_mut(id) = p.value.clone();
        }
        Ok(Self {
            seed,
            model,
            params,
        })
    }
}

pub fn build_model<T: Scalar>(
    cfg: &TrainConfig,
    data: &Prepared<T>,
    seed: u64,
) -> Result<(DualModel, ParamStore<T>)> {
    let mut store = ParamStore::new();
    let model = DualModel::build(
        &mut store,
        &cfg.model,
        data.x_init.cols(),
        data.x_topo.as_ref().map(|t| t.cols()),
        data.num_classes,
        seed,
        cfg.layer_weight_decay,
    )?;
    Ok((model, store))
}

/// Loss terms of one training pass, recorded on `tape`.
#[derive(Clone, Copy, Debug)]
pub struct LossGraph {
    pub out: ForwardOut,
    pub ce: crate::nn::Var,
    pub sr: Option<crate::nn::Var>,
    pub dr: Option<crate::nn::Var>,
    pub reg: Option<crate::nn::Var>,
    pub total: crate::nn::Var,
}

/// Records forward pass and joint loss for the training nodes.
pub fn loss_graph<T: Scalar>(
    tape: &mut Tape<T>,
    model: &DualModel,
    store: &ParamStore<T>,
    data: &Prepared<T>,
    reg_cfg: &RegConfig,
    pass_seed: u64,
) -> Result<LossGraph> {
    let xi = tape.constant_shared(data.x_init.clone());
    let xt = data
        .x_topo
        .as_ref()
        .map(|t| tape.constant_shared(t.clone()));
    let out = model.forward(tape, store, &data.adj, xi, xt, pass_seed)?;
    let logp = tape.log_softmax_rows(out.logits);
    let ce = cross_entropy(tape, logp, &data.labels, &data.split.train)?;
    let (sr, dr, reg) = match out.h_topo {
        Some(ht) if reg_cfg.use_sr || reg_cfg.use_dr => {
            let terms = reg_loss(tape, out.h_init, ht, reg_cfg)?;
            (terms.sr, terms.dr, Some(terms.total))
        }
        _ => (None, None, None),
    };
    let total = joint_loss(tape, ce, reg, reg_cfg.lambda)?;
    Ok(LossGraph {
        out,
        ce,
        sr,
        dr,
        reg,
        total,
    })
}

/// Eval-mode logits and init-branch output.
pub fn infer<T: Scalar>(
    model: &DualModel,
    store: &ParamStore<T>,
    data: &Prepared<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let mut tape = Tape::new(false);
    let xi = tape.constant_shared(data.x_init.clone());
    let xt = data
        .x_topo
        .as_ref()
        .map(|t| tape.constant_shared(t.clone()));
    let out = model.forward(&mut tape, store, &data.adj, xi, xt, 0)?;
    Ok((
        tape.value(out.logits).clone(),
        tape.value(out.h_init).clone(),
    ))
}

/// Share of `mask` nodes whose prediction equals the label.
pub fn accuracy(pred: &[usize], labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let hits = mask.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(hits as f64 / mask.len() as f64)
}

pub fn evaluate(trained: &TrainedModel, data: &Prepared<f32>, mask: &[usize]) -> Result<f64> {
    let (logits, _) = infer(&trained.model, &trained.params, data)?;
    accuracy(&argmax_rows(&logits), &data.labels, mask)
}

fn mean_nll(logits: &Matrix<f32>, labels: &[usize], mask: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in mask {
        let row = logits.row(i);
        let mx = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        let lse = row.iter().map(|&v| (v as f64 - mx).exp()).sum::<f64>().ln() + mx;
        total += lse - row[labels[i]] as f64;
    }
    total / mask.len() as f64
}

/// Trains one seed. Dropout masks and parameter initialisation derive from
/// `seed`; the single run is sequential apart from deterministic kernels.
pub fn train_seed(
    cfg: &TrainConfig,
    data: &Prepared<f32>,
    seed: u64,
) -> Result<(TrainedModel, SeedReport)> {
    cfg.validate()?;
    if data.split.val.is_empty() || data.split.test.is_empty() {
        return Err(Error::EmptyMask);
    }
    let reg_cfg = cfg.mode.reg_config(&cfg.reg);
    let (model, mut store) = build_model(cfg, data, seed)?;
    let mut adam = AdamState::new(cfg.optimizer, &store);
    let dropout_stream = seed::derive_str(seed, "dropout");

    let mut best = (f64::NEG_INFINITY, 0usize, store.clone());
    let mut since_best = 0;
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut tape = Tape::<f32>::new(true);
        let lg = loss_graph(
            &mut tape,
            &model,
            &store,
            data,
            &reg_cfg,
            seed::derive(dropout_stream, epoch as u64),
        )?;
        let total = tape.scalar(lg.total) as f64;
        if !total.is_finite() {
            return Err(Error::Numerical(format!(
                "loss is {total} at epoch {epoch} (seed {seed}); try a learning rate below {}",
                cfg.optimizer.lr
            )));
        }
        let read = |v: Option<crate::nn::Var>| v.map_or(0.0, |v| tape.scalar(v) as f64);
        let (ce, sr, dr, reg) = (
            tape.scalar(lg.ce) as f64,
            read(lg.sr),
            read(lg.dr),
            read(lg.reg),
        );
        let grads = tape.backward(lg.total)?.for_params(&store);
        drop(tape);
        adam.step(&mut store, &grads);

        let (logits, _) = infer(&model, &store, data)?;
        let pred = argmax_rows(&logits);
        let val_accuracy = accuracy(&pred, &data.labels, &data.split.val)?;
        curve.push(EpochRecord {
            epoch,
            train_loss: total,
            val_loss: mean_nll(&logits, &data.labels, &data.split.val),
            ce,
            sr,
            dr,
            reg_total: reg,
            val_accuracy,
        });
        if val_accuracy > best.0 {
            best = (val_accuracy, epoch, store.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (best_val, best_epoch, params) = best;
    let trained = TrainedModel {
        seed,
        model,
        params,
    };
    let test_accuracy = evaluate(&trained, data, &data.split.test)?;
    let report = SeedReport {
        seed,
        test_accuracy,
        best_val_accuracy: best_val,
        best_epoch,
        epochs_run: curve.len(),
        curve,
        oversmooth_residual: None,
    };
    Ok((trained, report))
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// One per seed, sorted by seed.
    pub models: Vec<TrainedModel>,
    pub report: RunReport,
    pub timing: Timing,
}

/// Trains every seed of `cfg.seeds`. Seeds run in parallel; results do not
/// depend on scheduling.
pub fn train(
    cfg: &TrainConfig,
    bundle: &DatasetBundle,
    topo: Option<&DenseMatrix>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = prepare::<f32>(cfg, bundle, topo)?;
    train_prepared(cfg, &data)
}

pub fn train_prepared(cfg: &TrainConfig, data: &Prepared<f32>) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut results = cfg
        .seeds
        .par_iter()
        .map(|&s| {
            let t = Instant::now();
            train_seed(cfg, data, s).map(|(m, r)| (m, r, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|(m, _, _)| m.seed);
    let timing = Timing {
        total_seconds: start.elapsed().as_secs_f64(),
        per_seed_seconds: results.iter().map(|(m, _, t)| (m.seed, *t)).collect(),
    };
    let (models, runs): (Vec<_>, Vec<_>) = results.into_iter().map(|(m, r, _)| (m, r)).unzip();
    Ok(TrainOutcome {
        models,
        report: RunReport::from_runs(&data.name, cfg, runs),
        timing,
    })
}
