use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use toporeg::dataset::{load_bundle, DatasetBundle};
use toporeg::experiments::{
    ablate, cached_topology, loss_curves, noise_sweep, oversmooth_experiment, sweep_lambda,
    DEFAULT_LAMBDAS, DEFAULT_NOISE_RATIOS,
};
use toporeg::models::Backend;
use toporeg::node2vec::{load_embedding, save_embedding, topology_features};
use toporeg::pca::{pca2d, pca_csv, scatter_svg};
use toporeg::train::{
    evaluate, infer, prepare, train, AblationMode, Timing, TrainConfig, TrainedModel,
};
use toporeg::{DenseMatrix, Error, ErrorKind, Result};

#[derive(Parser, Debug)]
#[command(
    name = "toporeg",
    version,
    about = "Topology-regularized dual GNN experiments"
)]
struct Cli {
    /// TOML (or JSON) file mirroring the training configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Dataset bundle directory. Falls back to `dataset` in the config.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Precomputed topology embedding directory. Without it the embedding is
    /// computed, or read from the cache.
    #[arg(long)]
    embedding: Option<PathBuf>,
    /// Embedding cache directory [default: <out>/cache].
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute topology features for a bundle.
    Embed {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train the configured mode over all seeds.
    Train {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Evaluate a saved checkpoint.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// train, val or test.
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Train all six ablation modes.
    Ablate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Feature-masking sweep, vanilla against SR+DR.
    Noise {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_NOISE_RATIOS.to_vec())]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        mask_seed: u64,
    },
    /// Deep GCNII with and without regularization; residuals and PCA.
    Oversmooth {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 64)]
        layers: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1])]
        lambdas: Vec<f64>,
        /// Also write scatter.svg.
        #[arg(long)]
        svg: bool,
    },
    /// 2-D PCA of a checkpoint's final representation, or of an embedding.
    Pca {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Train the configured dual mode over a grid of λ values.
    SweepLambda {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS.to_vec())]
        lambdas: Vec<f64>,
    },
}

fn config_error(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut serde_json::Value, top: serde_json::Value) {
    match (base, top) {
        (serde_json::Value::Object(b), serde_json::Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

/// Reads the config file on top of the preset for its backend.
fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = match path {
        None => TrainConfig::default(),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| config_error(format!("{}: {e}", p.display())))?;
            let user: serde_json::Value = if p.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("{}: {e}", p.display())))?
            } else {
                toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", p.display())))?
            };
            let backend = user
                .pointer("/model/backend")
                .cloned()
                .map(serde_json::from_value::<Backend>)
                .transpose()
                .map_err(config_error)?
                .unwrap_or(Backend::Gcn);
            let mut base =
                serde_json::to_value(TrainConfig::preset(backend)).map_err(config_error)?;
            merge(&mut base, user);
            serde_json::from_value(base)
                .map_err(|e| config_error(format!("{}: {e}", p.display())))?
        }
    };
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Ctx {
    cfg: TrainConfig,
    out: PathBuf,
}

impl Ctx {
    fn bundle(&self, d: &DataArgs) -> Result<DatasetBundle> {
        let dir = d
            .data
            .clone()
            .or_else(|| self.cfg.dataset.clone())
            .ok_or_else(|| {
                config_error("no dataset: pass --data or set `dataset` in the config")
            })?;
        load_bundle(&dir)
    }

    fn topo(&self, d: &DataArgs, bundle: &DatasetBundle) -> Result<DenseMatrix> {
        let e = match &d.embedding {
            Some(dir) => load_embedding(dir)?,
            None => {
                let cache = d.cache.clone().unwrap_or_else(|| self.out.join("cache"));
                cached_topology(bundle, &self.cfg.walk, &cache)?
            }
        };
        if e.rows() != bundle.num_nodes() {
            return Err(Error::Parse {
                file: "embedding".into(),
                detail: format!("{} rows for {} nodes", e.rows(), bundle.num_nodes()),
            });
        }
        Ok(e)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<S: serde::Serialize>(&self, name: &str, value: &S) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(config_error)?;
        s.push('\n');
        self.write(name, &s)
    }

    fn write_timing(&self, t: &Timing) -> Result<()> {
        self.write_json("timing.json", t)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref(), cli.seed)?;
    let ctx = Ctx { cfg, out: cli.out };
    fs::create_dir_all(&ctx.out).map_err(|e| io_error(&ctx.out, e))?;
    let cfg = &ctx.cfg;

    match cli.cmd {
        Command::Embed { data } => {
            let b = ctx.bundle(&data)?;
            let (e, stats) = topology_features(&b.graph, &cfg.walk)?;
            save_embedding(&e, Some(&cfg.walk), &ctx.out.join("embedding"))?;
            ctx.write_json(
                "embed.json",
                &json!({ "dataset": b.name, "nodes": e.rows(), "dim": e.cols(), "sgns_epoch_loss": stats.epoch_loss }),
            )?;
        }
        Command::Train { data } => {
            let b = ctx.bundle(&data)?;
            let topo = cfg
                .mode
                .needs_topo()
                .then(|| ctx.topo(&data, &b))
                .transpose()?;
            let out = train(cfg, &b, topo.as_ref())?;
            ctx.write_json("report.json", &out.report)?;
            ctx.write("curves.csv", &loss_curves(&out.report.runs[0]))?;
            ctx.write_timing(&out.timing)?;
            for m in &out.models {
                m.save(&ctx.out.join("checkpoints").join(format!("seed-{}", m.seed)))?;
            }
            println!(
                "{} {}: test accuracy {:.4} ± {:.4} over {} seed(s)",
                b.name,
                cfg.mode.name(),
                out.report.mean_test_accuracy,
                out.report.std_test_accuracy,
                out.report.runs.len()
            );
        }
        Command::Eval {
            data,
            checkpoint,
            split,
        } => {
            let b = ctx.bundle(&data)?;
            let topo = cfg
                .mode
                .needs_topo()
                .then(|| ctx.topo(&data, &b))
                .transpose()?;
            let prepared = prepare::<f32>(cfg, &b, topo.as_ref())?;
            let trained = TrainedModel::load(cfg, &prepared, cfg.seeds[0], &checkpoint)?;
            let mask = match split.as_str() {
                "train" => &prepared.split.train,
                "val" => &prepared.split.val,
                "test" => &prepared.split.test,
                other => return Err(config_error(format!("unknown split {other}"))),
            };
            let acc = evaluate(&trained, &prepared, mask)?;
            ctx.write_json(
                "eval.json",
                &json!({ "dataset": b.name, "split": split, "accuracy": acc }),
            )?;
            println!("{split} accuracy {acc:.4}");
        }
        Command::Ablate { data } => {
            let b = ctx.bundle(&data)?;
            let topo = ctx.topo(&data, &b)?;
            let (rep, timing) = ablate(cfg, &b, &topo)?;
            ctx.write_json("report.json", &rep)?;
            ctx.write_timing(&timing)?;
            for r in &rep.runs {
                println!(
                    "{:>9}: {:.4} ± {:.4}",
                    r.mode.name(),
                    r.mean_test_accuracy,
                    r.std_test_accuracy
                );
            }
        }
        Command::Noise {
            data,
            ratios,
            mask_seed,
        } => {
            if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(config_error("mask ratios must lie in [0, 1]"));
            }
            let b = ctx.bundle(&data)?;
            let topo = ctx.topo(&data, &b)?;
            let (rep, timing) = noise_sweep(cfg, &b, &topo, &ratios, mask_seed)?;
            ctx.write_json("report.json", &rep)?;
            ctx.write_timing(&timing)?;
            for p in &rep.points {
                println!(
                    "ratio {:.2}: vanilla {:.4}, srdr {:.4}",
                    p.ratio, p.vanilla.mean_test_accuracy, p.srdr.mean_test_accuracy
                );
            }
        }
        Command::Oversmooth {
            data,
            layers,
            alpha,
            lambdas,
            svg,
        } => {
            let b = ctx.bundle(&data)?;
            let topo = ctx.topo(&data, &b)?;
            let mut c = cfg.clone();
            c.model.backend = Backend::Gcnii;
            let out = oversmooth_experiment(&c, &b, &topo, layers, alpha, &lambdas)?;
            ctx.write_json("report.json", &out.report)?;
            ctx.write_timing(&out.timing)?;
            for (lambda, coords) in &out.pca {
                let suffix = if out.pca.len() == 1 {
                    String::new()
                } else {
                    format!("-lambda{lambda}")
                };
                ctx.write(&format!("pca{suffix}.csv"), &pca_csv(coords, &b.labels))?;
                if svg {
                    let title = format!("{} GCNII-{layers} lambda={lambda}", b.name);
                    ctx.write(
                        &format!("scatter{suffix}.svg"),
                        &scatter_svg(coords, &b.labels, &title),
                    )?;
                }
            }
            for (lambda, m) in &out.report.medians {
                println!("lambda {lambda}: median residual {m:.6}");
            }
        }
        Command::Pca {
            data,
            checkpoint,
            svg,
        } => {
            let b = ctx.bundle(&data)?;
            let (h, what) = match &checkpoint {
                Some(dir) => {
                    let topo = cfg
                        .mode
                        .needs_topo()
                        .then(|| ctx.topo(&data, &b))
                        .transpose()?;
                    let prepared = prepare::<f32>(cfg, &b, topo.as_ref())?;
                    let trained = TrainedModel::load(cfg, &prepared, cfg.seeds[0], dir)?;
                    let (_, h) = infer(&trained.model, &trained.params, &prepared)?;
                    (h.cast::<f64>(), "representation")
                }
                None => (ctx.topo(&data, &b)?, "topology features"),
            };
            let p = pca2d(&h)?;
            ctx.write("pca.csv", &pca_csv(&p.coords, &b.labels))?;
            if svg {
                ctx.write(
                    "scatter.svg",
                    &scatter_svg(&p.coords, &b.labels, &format!("{} {what}", b.name)),
                )?;
            }
        }
        Command::SweepLambda { data, lambdas } => {
            let b = ctx.bundle(&data)?;
            let topo = ctx.topo(&data, &b)?;
            let mut c = cfg.clone();
            if !c.mode.is_dual() {
                c.mode = AblationMode::Srdr;
            }
            let (rep, timing) = sweep_lambda(&c, &b, &topo, &lambdas)?;
            ctx.write_json("report.json", &rep)?;
            ctx.write_timing(&timing)?;
            for p in &rep.points {
                println!("lambda {}: {:.4}", p.lambda, p.report.mean_test_accuracy);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}
