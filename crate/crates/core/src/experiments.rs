//! Experiment drivers built on [`train`](crate::train): mode ablation,
//! feature-noise sweep, deep-model over-smoothing, λ sweep and loss curves.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{mask_features, DatasetBundle};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{oversmooth_residual, Propagation, DEFAULT_PAIR_BUDGET};
use crate::models::Backend;
use crate::node2vec::{load_embedding, save_embedding, topology_features, WalkConfig};
use crate::pca::pca2d;
use crate::train::{
    infer, prepare, train, train_prepared, AblationMode, RunReport, SeedReport, Timing, TrainConfig,
};

/// Topology features for `bundle`, read from `cache_dir` when present and
/// computed and stored there otherwise. Entries are keyed by dataset name
/// and walk-config hash. Values are rounded to f32 in both cases, so a
/// cache hit returns exactly what a miss does.
pub fn cached_topology(
    bundle: &DatasetBundle,
    walk: &WalkConfig,
    cache_dir: &Path,
) -> Result<DenseMatrix> {
    let dir = cache_dir.join(format!("{}-{}", bundle.name, walk.cache_key()));
    if dir.join("meta.json").exists() {
        let e = load_embedding(&dir)?;
        if e.rows() == bundle.num_nodes() {
            return Ok(e);
        }
        log::warn!(
            "cached embedding at {} has wrong size, recomputing",
            dir.display()
        );
    }
    let (e, _) = topology_features(&bundle.graph, walk)?;
    save_embedding(&e, Some(walk), &dir)?;
    Ok(e.map(|v| v as f32 as f64))
}

fn merge(into: &mut Timing, t: Timing) {
    into.total_seconds += t.total_seconds;
    into.per_seed_seconds.extend(t.per_seed_seconds);
}

fn run_mode(
    cfg: &TrainConfig,
    mode: AblationMode,
    bundle: &DatasetBundle,
    topo: &DenseMatrix,
) -> Result<(RunReport, Timing)> {
    let cfg = TrainConfig {
        mode,
        ..cfg.clone()
    };
    let topo = mode.needs_topo().then_some(topo);
    let out = train(&cfg, bundle, topo)?;
    Ok((out.report, out.timing))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// One report per mode, in [`AblationMode::ALL`] order.
    pub runs: Vec<RunReport>,
}

impl AblationReport {
    pub fn get(&self, mode: AblationMode) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.mode == mode)
    }
}

/// Runs all six modes with otherwise identical settings.
pub fn ablate(
    cfg: &TrainConfig,
    bundle: &DatasetBundle,
    topo: &DenseMatrix,
) -> Result<(AblationReport, Timing)> {
    let mut timing = Timing::default();
    let mut runs = Vec::new();
    for mode in AblationMode::ALL {
        let (r, t) = run_mode(cfg, mode, bundle, topo)?;
        merge(&mut timing, t);
        runs.push(r);
    }
    Ok((AblationReport { runs }, timing))
}

pub const DEFAULT_NOISE_RATIOS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub ratio: f64,
    pub vanilla: RunReport,
    pub srdr: RunReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub mask_seed: u64,
    pub points: Vec<NoisePoint>,
}

/// For each ratio, zeroes that share of feature rows and trains vanilla and
/// SR+DR on the masked bundle. Topology features are left untouched.
pub fn noise_sweep(
    cfg: &TrainConfig,
    bundle: &DatasetBundle,
    topo: &DenseMatrix,
    ratios: &[f64],
    mask_seed: u64,
) -> Result<(NoiseReport, Timing)> {
    let mut timing = Timing::default();
    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let masked = mask_features(bundle, ratio, mask_seed)?;
        let (vanilla, t1) = run_mode(cfg, AblationMode::Vanilla, &masked, topo)?;
        let (srdr, t2) = run_mode(cfg, AblationMode::Srdr, &masked, topo)?;
        merge(&mut timing, t1);
        merge(&mut timing, t2);
        points.push(NoisePoint {
            ratio,
            vanilla,
            srdr,
        });
    }
    Ok((NoiseReport { mask_seed, points }, timing))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OversmoothPoint {
    pub lambda: f64,
    pub seed: u64,
    /// Residual of the final init-branch output on the largest component.
    pub residual: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OversmoothReport {
    pub layers: usize,
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub component_size: usize,
    pub points: Vec<OversmoothPoint>,
    /// `(lambda, median residual over seeds)`.
    pub medians: Vec<(f64, f64)>,
}

/// Output of [`oversmooth_experiment`]: the report plus, per λ, the PCA
/// projection of the first seed's final representation (all nodes).
#[derive(Clone, Debug)]
pub struct OversmoothOutput {
    pub report: OversmoothReport,
    pub pca: Vec<(f64, DenseMatrix)>,
    pub timing: Timing,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Trains a `layers`-deep GCNII at each λ (λ = 0 as the plain single
/// branch, otherwise SR+DR) and measures how far each seed's final
/// init-branch output is from the collapsed pattern.
pub fn oversmooth_experiment(
    cfg: &TrainConfig,
    bundle: &DatasetBundle,
    topo: &DenseMatrix,
    layers: usize,
    alpha: f64,
    lambdas: &[f64],
) -> Result<OversmoothOutput> {
    if cfg.model.backend != Backend::Gcnii {
        return Err(Error::Config(
            "oversmooth experiment needs the gcnii backend".into(),
        ));
    }
    let lcc = bundle.graph.largest_component();
    let sub = bundle.graph.induced_subgraph(&lcc).add_self_loops();

    let mut timing = Timing::default();
    let mut points = Vec::new();
    let mut pca = Vec::new();
    let mut medians = Vec::new();
    for &lambda in lambdas {
        let mut run_cfg = cfg.clone();
        run_cfg.model.propagation_steps = layers;
        run_cfg.model.alpha = alpha;
        run_cfg.reg.lambda = lambda;
        run_cfg.mode = if lambda == 0.0 {
            AblationMode::Vanilla
        } else {
            AblationMode::Srdr
        };
        let t = run_cfg.mode.needs_topo().then_some(topo);
        let data = prepare::<f32>(&run_cfg, bundle, t)?;
        let out = train_prepared(&run_cfg, &data)?;
        merge(&mut timing, out.timing);

        let mut residuals = Vec::new();
        for (m, run) in out.models.iter().zip(&out.report.runs) {
            let (_, h) = infer(&m.model, &m.params, &data)?;
            let h: DenseMatrix = h.cast();
            let residual = oversmooth_residual(
                &h.select_rows(&lcc),
                &sub,
                Propagation::Sym,
                DEFAULT_PAIR_BUDGET,
                m.seed,
            )?;
            residuals.push(residual);
            points.push(OversmoothPoint {
                lambda,
                seed: m.seed,
                residual,
                test_accuracy: run.test_accuracy,
            });
            if pca.len() < medians.len() + 1 {
                pca.push((lambda, pca2d(&h)?.coords));
            }
        }
        medians.push((lambda, median(&residuals)));
    }
    let report = OversmoothReport {
        layers,
        alpha,
        lambdas: lambdas.to_vec(),
        seeds: cfg.seeds.clone(),
        component_size: lcc.len(),
        points,
        medians,
    };
    Ok(OversmoothOutput {
        report,
        pca,
        timing,
    })
}

pub const DEFAULT_LAMBDAS: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub report: RunReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweep {
    pub points: Vec<LambdaPoint>,
}

/// Trains `cfg.mode` (which must be a dual mode) at each λ.
pub fn sweep_lambda(
    cfg: &TrainConfig,
    bundle: &DatasetBundle,
    topo: &DenseMatrix,
    lambdas: &[f64],
) -> Result<(LambdaSweep, Timing)> {
    if !cfg.mode.is_dual() {
        return Err(Error::Config(format!(
            "lambda sweep needs a dual mode, got {}",
            cfg.mode.name()
        )));
    }
    let mut timing = Timing::default();
    let mut points = Vec::new();
    for &lambda in lambdas {
        let mut c = cfg.clone();
        c.reg.lambda = lambda;
        let out = train(&c, bundle, Some(topo))?;
        merge(&mut timing, out.timing);
        points.push(LambdaPoint {
            lambda,
            report: out.report,
        });
    }
    Ok((LambdaSweep { points }, timing))
}

pub const CURVES_HEADER: &str = "epoch,ce,sr,dr,reg_total";

/// Per-epoch loss terms of one seed as CSV.
pub fn loss_curves(run: &SeedReport) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for e in &run.curve {
        let _ = writeln!(s, "{},{},{},{},{}", e.epoch, e.ce, e.sr, e.dr, e.reg_total);
    }
    s
}

/// Whether the mean of the last `window` values is below the mean of the
/// first `window`. `None` when there are fewer than `window` values.
pub fn trailing_mean_below_leading(values: &[f64], window: usize) -> Option<bool> {
    if window == 0 || values.len() < window {
        return None;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some(mean(&values[values.len() - window..]) < mean(&values[..window]))
}
