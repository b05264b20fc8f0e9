use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use toporeg::dataset::{generate_sbm, save_bundle};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toporeg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

struct Fixture {
    _tmp: tempfile::TempDir,
    data: PathBuf,
    config: PathBuf,
    root: PathBuf,
}

const CONFIG: &str = r#"
epochs = 20
patience = 20
seeds = [0, 1]
row_normalize = false

[model]
backend = "gcn"
hidden = 8

[walk]
embedding_dim = 8
walks_per_node = 3
walk_length = 10
window = 3
epochs = 1

[split]
per_class_train = 5
val_size = 20
test_size = 30
"#;

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let data = root.join("sbm");
    save_bundle(&generate_sbm(90, 3, 0.15, 0.02, 6, 0.5, 1).unwrap(), &data).unwrap();
    let config = root.join("cfg.toml");
    fs::write(&config, CONFIG).unwrap();
    Fixture {
        _tmp: tmp,
        data,
        config,
        root,
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_report_curves_and_checkpoints() {
    let f = fixture();
    let out = f.root.join("run");
    let o = run(&[
        "--config",
        s(&f.config),
        "--out",
        s(&out),
        "train",
        "--data",
        s(&f.data),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    let curves = fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("epoch,ce,sr,dr,reg_total"));
    assert!(out.join("checkpoints/seed-0/meta.json").exists());
    assert!(out.join("timing.json").exists());

    let o = run(&[
        "--config",
        s(&f.config),
        "--out",
        s(&out),
        "--seed",
        "1",
        "eval",
        "--data",
        s(&f.data),
        "--checkpoint",
        s(&out.join("checkpoints/seed-1")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    let want = report["runs"][1]["test_accuracy"].as_f64().unwrap();
    assert_eq!(eval["accuracy"].as_f64().unwrap(), want);
}

#[test]
fn same_seed_gives_identical_report() {
    let f = fixture();
    let (a, b) = (f.root.join("a"), f.root.join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "--config",
            s(&f.config),
            "--out",
            s(out),
            "--seed",
            "4",
            "train",
            "--data",
            s(&f.data),
        ]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn embed_and_pca_outputs() {
    let f = fixture();
    let out = f.root.join("emb");
    let o = run(&[
        "--config",
        s(&f.config),
        "--out",
        s(&out),
        "embed",
        "--data",
        s(&f.data),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("embedding/embedding.bin").exists());
    let o = run(&[
        "--config",
        s(&f.config),
        "--out",
        s(&out),
        "pca",
        "--data",
        s(&f.data),
        "--embedding",
        s(&out.join("embedding")),
        "--svg",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("pca.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("node_id,x,y,label"));
    assert_eq!(csv.lines().count(), 91);
    assert!(fs::read_to_string(out.join("scatter.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn experiment_subcommands_run() {
    let f = fixture();
    let cfg = f.root.join("quick.toml");
    fs::write(
        &cfg,
        CONFIG
            .replace("epochs = 20", "epochs = 4")
            .replace("seeds = [0, 1]", "seeds = [0]"),
    )
    .unwrap();
    for (sub, extra) in [
        ("ablate", vec![]),
        ("noise", vec!["--ratios", "0.1,0.5"]),
        ("sweep-lambda", vec!["--lambdas", "0.1,1"]),
        ("oversmooth", vec!["--layers", "4", "--svg"]),
    ] {
        let out = f.root.join(sub);
        let mut args = vec![
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            sub,
            "--data",
            s(&f.data),
        ];
        args.extend(extra);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("report.json").exists(), "{sub}");
    }
    assert!(f.root.join("oversmooth/pca-lambda0.1.csv").exists());
    assert!(f.root.join("oversmooth/scatter-lambda0.svg").exists());
}

#[test]
fn exit_codes() {
    let f = fixture();
    let out = f.root.join("x");

    let bad_cfg = f.root.join("bad.toml");
    fs::write(&bad_cfg, "epochs = 0\n").unwrap();
    let o = run(&[
        "--config",
        s(&bad_cfg),
        "--out",
        s(&out),
        "train",
        "--data",
        s(&f.data),
    ]);
    assert_eq!(code(&o), 2);

    let o = run(&["--out", s(&out), "train"]);
    assert_eq!(code(&o), 2, "missing dataset is a config error");

    let o = run(&[
        "--out",
        s(&out),
        "train",
        "--data",
        s(&f.root.join("nowhere")),
    ]);
    assert_eq!(code(&o), 3);

    let broken = f.root.join("broken");
    fs::create_dir_all(&broken).unwrap();
    for file in ["meta.json", "edges.csv", "features.bin", "labels.csv"] {
        fs::copy(f.data.join(file), broken.join(file)).unwrap();
    }
    fs::write(broken.join("edges.csv"), "0,1\n1,9999\n").unwrap();
    let o = run(&[
        "--config",
        s(&f.config),
        "--out",
        s(&out),
        "train",
        "--data",
        s(&broken),
    ]);
    assert_eq!(code(&o), 3);

    let nan_cfg = f.root.join("nan.toml");
    fs::write(
        &nan_cfg,
        format!("{CONFIG}\n[optimizer]\nlr = 1e30\n").replace("seeds = [0, 1]", "seeds = [0]"),
    )
    .unwrap();
    let o = run(&[
        "--config",
        s(&nan_cfg),
        "--out",
        s(&out),
        "train",
        "--data",
        s(&f.data),
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
