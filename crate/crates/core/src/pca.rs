//! Two-component PCA and a minimal SVG scatter plot.

use std::fmt::Write as _;

use rand::Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::seed;

const MAX_ITERS: usize = 100_000;
const TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Pca2 {
    /// `n × 2` projections onto the top two components.
    pub coords: DenseMatrix,
    /// Unit principal directions, `d × 2`.
    pub components: DenseMatrix,
    /// Covariance eigenvalues of the two components.
    pub variances: [f64; 2],
    /// The second component is degenerate and its column was zeroed.
    pub rank_deficient: bool,
}

fn matvec(c: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    (0..d)
        .map(|i| (0..d).map(|j| c[i * d + j] * v[j]).sum())
        .collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Dominant eigenpair of a symmetric PSD matrix by power iteration. The sign
/// is fixed so the largest-magnitude entry is positive.
fn power_iteration(c: &[f64], d: usize, seed: u64) -> (f64, Vec<f64>) {
    let mut rng = seed::rng(seed);
    let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let mut w = matvec(c, d, &v);
        lambda = normalize(&mut w);
        if lambda == 0.0 {
            break;
        }
        let delta = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = w;
        if delta < TOL {
            break;
        }
    }
    let k = (0..d).fold(0, |k, i| if v[i].abs() > v[k].abs() { i } else { k });
    if v[k] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}

/// Top two principal components of the rows of `h`, by power iteration with
/// deflation on the centered covariance.
pub fn pca2d(h: &DenseMatrix) -> Result<Pca2> {
    let (n, d) = h.shape();
    if n < 3 {
        return Err(Error::shape("pca2d rows", ">= 3", n));
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| h.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let x = DenseMatrix::from_fn(n, d, |i, j| h.get(i, j) - mean[j]);
    let mut c = vec![0.0; d * d];
    for i in 0..n {
        let r = x.row(i);
        for a in 0..d {
            for b in 0..d {
                c[a * d + b] += r[a] * r[b];
            }
        }
    }
    c.iter_mut().for_each(|v| *v /= (n - 1) as f64);

    let (l1, v1) = power_iteration(&c, d, 0x5043_4131);
    for a in 0..d {
        for b in 0..d {
            c[a * d + b] -= l1 * v1[a] * v1[b];
        }
    }
    let (l2, mut v2) = if d >= 2 {
        power_iteration(&c, d, 0x5043_4132)
    } else {
        (0.0, vec![0.0; d])
    };
    let rank_deficient = d < 2 || l2 <= 1e-12 * l1.max(f64::MIN_POSITIVE);
    if rank_deficient {
        log::warn!("pca2d: data has rank < 2, second component set to zero");
        v2.iter_mut().for_each(|v| *v = 0.0);
    }
    let components = DenseMatrix::from_fn(d, 2, |i, k| if k == 0 { v1[i] } else { v2[i] });
    let coords = x.matmul(&components)?;
    Ok(Pca2 {
        coords,
        components,
        variances: [l1, if rank_deficient { 0.0 } else { l2 }],
        rank_deficient,
    })
}

/// `node_id,x,y,label` rows.
pub fn pca_csv(coords: &DenseMatrix, labels: &[usize]) -> String {
    let mut s = String::from("node_id,x,y,label\n");
    assert_eq!(coords.rows(), labels.len(), "one label per row");
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{label}", coords.get(i, 0), coords.get(i, 1),);
    }
    s
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Standalone SVG with one dot per row of `coords`, coloured by label.
pub fn scatter_svg(coords: &DenseMatrix, labels: &[usize], title: &str) -> String {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 30.0;
    let n = coords.rows();
    let range = |k: usize| {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = coords.get(i, k);
            (lo.min(v), hi.max(v))
        });
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        }
    };
    let ((x0, x1), (y0, y1)) = (range(0), range(1));
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (SIZE - 2.0 * PAD);
    let sy = |v: f64| SIZE - PAD - (v - y0) / (y1 - y0) * (SIZE - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    for i in 0..n {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.8"/>"#,
            sx(coords.get(i, 0)),
            sy(coords.get(i, 1)),
            PALETTE[labels[i] % PALETTE.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
