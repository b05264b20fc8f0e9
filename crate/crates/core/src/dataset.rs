//! Dataset bundles on disk, Planetoid-style splits, synthetic stochastic
//! block model graphs and feature masking.
//!
//! A bundle directory holds:
//!
//! | file          | content                                                        |
//! |---------------|----------------------------------------------------------------|
//! | `meta.json`   | `{name, num_nodes, num_features, num_classes}`                 |
//! | `edges.csv`   | `src,dst` per line, 0-indexed, one undirected edge per line     |
//! | `features.bin`| row-major little-endian f32, `num_nodes × num_features`         |
//! | `labels.csv`  | `node_id,label` per line                                       |
//! | `splits.json` | optional `{train: [..], val: [..], test: [..]}`                 |

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::{read_f32_le, read_json, write_f32_le, write_json};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Fixed benchmark split shipped with the bundle, if any.
    pub splits: Option<SplitMask>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMask {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
}

impl SplitMask {
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (part, idx) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            for &i in idx {
                if i >= n {
                    return Err(Error::Config(format!("{part} index {i} >= {n}")));
                }
                if seen[i] {
                    return Err(Error::Config(format!(
                        "node {i} appears in two split parts"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

impl DatasetBundle {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn meta(&self) -> BundleMeta {
        BundleMeta {
            name: self.name.clone(),
            num_nodes: self.num_nodes(),
            num_features: self.num_features(),
            num_classes: self.num_classes,
        }
    }

    /// Checks row counts, label range and that every class is populated.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        if self.features.rows() != n {
            return Err(Error::shape("features rows", n, self.features.rows()));
        }
        if self.labels.len() != n {
            return Err(Error::shape("labels", n, self.labels.len()));
        }
        let mut count = vec![0usize; self.num_classes];
        for (node, &label) in self.labels.iter().enumerate() {
            if label >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    node,
                    label,
                    num_classes: self.num_classes,
                });
            }
            count[label] += 1;
        }
        if let Some(c) = count.iter().position(|&k| k == 0) {
            return Err(Error::InsufficientClass {
                class: c,
                available: 0,
                required: 1,
            });
        }
        if let Some(s) = &self.splits {
            s.validate(n)?;
        }
        Ok(())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut count = vec![0usize; self.num_classes];
        for &l in &self.labels {
            count[l] += 1;
        }
        count
    }
}

pub fn load_bundle(dir: &Path) -> Result<DatasetBundle> {
    let meta: BundleMeta = read_json(&dir.join("meta.json"))?;
    let n = meta.num_nodes;

    let edges_path = dir.join("edges.csv");
    let mut edges = Vec::new();
    for (lineno, fields) in read_csv_pairs(&edges_path)? {
        match fields {
            Some(pair) => edges.push(pair),
            None if lineno == 0 => {}
            None => return Err(parse_error(&edges_path, lineno, "expected two integers")),
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let data = read_f32_le(&dir.join("features.bin"), n * meta.num_features)?;
    let features = DenseMatrix::from_vec(
        n,
        meta.num_features,
        data.into_iter().map(f64::from).collect(),
    )?;

    let labels_path = dir.join("labels.csv");
    let mut labels = vec![usize::MAX; n];
    for (lineno, fields) in read_csv_pairs(&labels_path)? {
        match fields {
            Some((node, label)) => {
                if node >= n {
                    return Err(parse_error(&labels_path, lineno, "node id out of range"));
                }
                if label >= meta.num_classes {
                    return Err(Error::LabelOutOfRange {
                        node,
                        label,
                        num_classes: meta.num_classes,
                    });
                }
                labels[node] = label;
            }
            None if lineno == 0 => {}
            None => return Err(parse_error(&labels_path, lineno, "expected node_id,label")),
        }
    }
    if let Some(node) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(parse_error(
            &labels_path,
            0,
            &format!("node {node} has no label"),
        ));
    }

    let splits_path = dir.join("splits.json");
    let splits = if splits_path.exists() {
        Some(read_json(&splits_path)?)
    } else {
        None
    };

    let bundle = DatasetBundle {
        name: meta.name,
        graph,
        features,
        labels,
        num_classes: meta.num_classes,
        splits,
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes the exact layout [`load_bundle`] reads. Output bytes depend only
/// on the bundle contents.
pub fn save_bundle(b: &DatasetBundle, dir: &Path) -> Result<()> {
    b.validate()?;
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    write_json(&dir.join("meta.json"), &b.meta())?;

    let mut edges = String::new();
    for (u, v) in b.graph.without_self_loops().edge_list() {
        edges.push_str(&format!("{u},{v}\n"));
    }
    let p = dir.join("edges.csv");
    fs::write(&p, edges).map_err(Error::io(&p))?;

    let data: Vec<f32> = b.features.data().iter().map(|&v| v as f32).collect();
    write_f32_le(&dir.join("features.bin"), &data)?;

    let mut labels = String::from("node_id,label\n");
    for (i, l) in b.labels.iter().enumerate() {
        labels.push_str(&format!("{i},{l}\n"));
    }
    let p = dir.join("labels.csv");
    fs::write(&p, labels).map_err(Error::io(&p))?;

    let p = dir.join("splits.json");
    match &b.splits {
        Some(s) => write_json(&p, s)?,
        None if p.exists() => fs::remove_file(&p).map_err(Error::io(&p))?,
        None => {}
    }
    Ok(())
}

type CsvPair = (usize, Option<(usize, usize)>);

/// Yields `(line index, Some((a, b)))` for integer pairs and `None` for lines
/// that do not parse (a header is tolerated on line 0 by the callers).
fn read_csv_pairs(path: &Path) -> Result<Vec<CsvPair>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let mut it = line.split([',', ' ', '\t']).filter(|s| !s.is_empty());
            let pair = match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => a.trim().parse().ok().zip(b.trim().parse().ok()),
                _ => None,
            };
            (i, pair)
        })
        .collect())
}

fn parse_error(path: &Path, line: usize, detail: &str) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        detail: format!("line {}: {detail}", line + 1),
    }
}

/// Planetoid-style split: `per_class_train` nodes of every class for
/// training, then `val_size` and `test_size` nodes drawn without replacement
/// from the rest. Each part is returned sorted.
pub fn standard_split(
    b: &DatasetBundle,
    per_class_train: usize,
    val_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<SplitMask> {
    let mut rng = seed::rng(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); b.num_classes];
    for (i, &l) in b.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut train = Vec::with_capacity(per_class_train * b.num_classes);
    let mut rest = Vec::new();
    for (class, mut nodes) in by_class.into_iter().enumerate() {
        if nodes.len() < per_class_train {
            return Err(Error::InsufficientClass {
                class,
                available: nodes.len(),
                required: per_class_train,
            });
        }
        nodes.shuffle(&mut rng);
        train.extend_from_slice(&nodes[..per_class_train]);
        rest.extend_from_slice(&nodes[per_class_train..]);
    }
    rest.sort_unstable();
    if rest.len() < val_size + test_size {
        return Err(Error::Config(format!(
            "{} nodes left after training picks, need {} for val+test",
            rest.len(),
            val_size + test_size
        )));
    }
    rest.shuffle(&mut rng);
    let mut val = rest[..val_size].to_vec();
    let mut test = rest[val_size..val_size + test_size].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitMask { train, val, test })
}

/// Stochastic block model with `c` balanced classes.
///
/// Node `i` belongs to class `i * c / n`. Each class gets a seeded random
/// unit mean vector; features are that mean plus `N(0, feature_sigma²)`
/// noise, rounded to f32 so the bundle survives a save/load round trip.
pub fn generate_sbm(
    n: usize,
    c: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    feature_sigma: f64,
    seed: u64,
) -> Result<DatasetBundle> {
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(Error::Config(format!(
            "SBM needs 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    if c == 0 || n < c {
        return Err(Error::Config(format!(
            "SBM needs 1 <= c <= n, got c={c}, n={n}"
        )));
    }
    if feature_sigma < 0.0 {
        return Err(Error::Config("feature_sigma must be >= 0".into()));
    }
    let labels: Vec<usize> = (0..n).map(|i| i * c / n).collect();

    let mut rng = seed::rng(seed::derive(seed, 1));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let mut rng = seed::rng(seed::derive(seed, 2));
    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            let v: Vec<f64> = (0..feature_dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut rng = seed::rng(seed::derive(seed, 3));
    let features = DenseMatrix::from_fn(n, feature_dim, |i, j| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        (means[labels[i]][j] + feature_sigma * noise) as f32 as f64
    });

    Ok(DatasetBundle {
        name: format!("sbm-n{n}-c{c}-s{seed}"),
        graph,
        features,
        labels,
        num_classes: c,
        splits: None,
    })
}

/// Zeroes `floor(ratio · n)` distinct, uniformly chosen feature rows.
pub fn mask_features(b: &DatasetBundle, ratio: f64, seed: u64) -> Result<DatasetBundle> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Config(format!("mask ratio {ratio} outside [0, 1]")));
    }
    let n = b.num_nodes();
    let k = (ratio * n as f64).floor() as usize;
    let mut out = b.clone();
    for &i in masked_rows(n, k, seed).iter() {
        out.features.row_mut(i).fill(0.0);
    }
    Ok(out)
}

/// The rows [`mask_features`] zeroes for a given `(n, k, seed)`.
pub fn masked_rows(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    let (chosen, _) = idx.partial_shuffle(&mut rng, k);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    chosen
}
