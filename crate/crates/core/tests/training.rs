use toporeg::dataset::{generate_sbm, standard_split, DatasetBundle};
use toporeg::models::Backend;
use toporeg::train::{train, AblationMode, TrainConfig};

fn config(backend: Backend, mode: AblationMode) -> TrainConfig {
    let mut cfg = TrainConfig::preset(backend);
    cfg.mode = mode;
    cfg.row_normalize = false;
    cfg.model.hidden = 16;
    cfg.model.propagation_steps = 8;
    cfg.epochs = 100;
    cfg.patience = 100;
    cfg.seeds = vec![0, 1];
    cfg.split.per_class_train = 10;
    cfg.split.val_size = 60;
    cfg.split.test_size = 150;
    cfg
}

/// Nearest class mean over raw features, fit on the training nodes.
fn centroid_accuracy(b: &DatasetBundle, cfg: &TrainConfig) -> f64 {
    let s = &cfg.split;
    let split = standard_split(b, s.per_class_train, s.val_size, s.test_size, s.seed).unwrap();
    let d = b.num_features();
    let mut mean = vec![vec![0.0; d]; b.num_classes];
    let mut count = vec![0.0; b.num_classes];
    for &i in &split.train {
        count[b.labels[i]] += 1.0;
        for (m, &x) in mean[b.labels[i]].iter_mut().zip(b.features.row(i)) {
            *m += x;
        }
    }
    for (m, c) in mean.iter_mut().zip(&count) {
        m.iter_mut().for_each(|v| *v /= c);
    }
    let hits = split
        .test
        .iter()
        .filter(|&&i| {
            let dist = |m: &Vec<f64>| -> f64 {
                m.iter()
                    .zip(b.features.row(i))
                    .map(|(a, x)| (a - x).powi(2))
                    .sum()
            };
            let best = (0..b.num_classes)
                .min_by(|&a, &c| dist(&mean[a]).total_cmp(&dist(&mean[c])))
                .unwrap();
            best == b.labels[i]
        })
        .count();
    hits as f64 / split.test.len() as f64
}

#[test]
fn graph_models_beat_feature_only_oracle() {
    // noisy features, informative graph
    let b = generate_sbm(300, 3, 0.1, 0.01, 8, 1.2, 3).unwrap();
    let cfg = config(Backend::Gcn, AblationMode::Vanilla);
    let oracle = centroid_accuracy(&b, &cfg);
    for backend in [Backend::Gcn, Backend::Appnp] {
        let cfg = config(backend, AblationMode::Vanilla);
        let out = train(&cfg, &b, None).unwrap();
        let acc = out.report.mean_test_accuracy;
        println!("{backend:?}: {acc:.3} vs centroid oracle {oracle:.3}");
        assert!(acc >= 0.9, "{backend:?} reached only {acc}");
        assert!(
            acc > oracle + 0.05,
            "{backend:?} {acc} does not use the graph (oracle {oracle})"
        );
    }
}

#[test]
fn clean_features_are_learned() {
    let b = generate_sbm(300, 3, 0.1, 0.01, 8, 0.2, 4).unwrap();
    let cfg = config(Backend::Gcn, AblationMode::Vanilla);
    let acc = train(&cfg, &b, None).unwrap().report.mean_test_accuracy;
    assert!(acc >= 0.95, "{acc}");
    assert!(centroid_accuracy(&b, &cfg) >= 0.9);
}

#[test]
fn training_curves_are_finite_and_ce_falls() {
    let b = generate_sbm(300, 3, 0.1, 0.01, 8, 0.8, 5).unwrap();
    let topo = toporeg::node2vec::topology_features(
        &b.graph,
        &toporeg::node2vec::WalkConfig {
            embedding_dim: 16,
            walks_per_node: 4,
            walk_length: 20,
            window: 4,
            epochs: 1,
            ..Default::default()
        },
    )
    .unwrap()
    .0;
    let cfg = config(Backend::Gcn, AblationMode::Srdr);
    let out = train(&cfg, &b, Some(&topo)).unwrap();
    for run in &out.report.runs {
        let ce: Vec<f64> = run.curve.iter().map(|e| e.ce).collect();
        assert!(run
            .curve
            .iter()
            .all(|e| e.train_loss.is_finite() && e.reg_total.is_finite()));
        assert!(run.curve.iter().all(|e| e.sr.is_finite() && e.dr >= 0.0));
        assert!(ce.last().unwrap() < &ce[0]);
    }
}
