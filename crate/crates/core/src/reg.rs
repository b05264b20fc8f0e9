//! Cross-branch regularization and the joint training loss.
//!
//! * SR: for each node `i`, `(1/N) Σ_{j≠i} cos(a_i, b_j)`, averaged over
//!   nodes. Computed in `O(n·h)` as `â_i · (S − b̂_i)` with `S = Σ_j b̂_j`.
//! * DR: for each node, `‖a_i − b_i‖²`, averaged over nodes.
//!
//! Row norms carry an additive guard: `x / (‖x‖ + ε)`.

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::nn::{Tape, Var};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegConfig {
    pub lambda: f64,
    pub use_sr: bool,
    pub use_dr: bool,
    pub epsilon: f64,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            use_sr: true,
            use_dr: true,
            epsilon: 1e-12,
        }
    }
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda {} must be >= 0",
                self.lambda
            )));
        }
        if self.lambda > 0.0 && !self.use_sr && !self.use_dr {
            return Err(Error::Config(
                "lambda > 0 with both SR and DR disabled".into(),
            ));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_pair(op: &'static str, a: Var, b: Var, min_rows: usize) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    if a.shape().0 < min_rows {
        return Err(Error::shape(op, format!(">= {min_rows} rows"), a.shape().0));
    }
    Ok(())
}

pub fn sr_loss<T: Scalar>(tape: &mut Tape<T>, a: Var, b: Var, eps: f64) -> Result<Var> {
    check_pair("sr_loss", a, b, 2)?;
    let n = a.shape().0;
    let an = tape.row_l2_normalize(a, T::from_f64(eps));
    let bn = tape.row_l2_normalize(b, T::from_f64(eps));
    let ones_row = tape.constant(Matrix::filled(1, n, T::ONE));
    let ones_col = tape.constant(Matrix::filled(n, 1, T::ONE));
    let s = tape.matmul(ones_row, bn)?;
    let s_rows = tape.matmul(ones_col, s)?;
    let others = tape.sub(s_rows, bn)?;
    let per_node = tape.dot_rows(an, others)?;
    let total = tape.reduce_sum(per_node);
    Ok(tape.scale(total, T::from_f64(1.0 / (n * n) as f64)))
}

/// Direct double loop over node pairs, in f64.
pub fn sr_loss_naive<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, eps: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            "sr_loss_naive",
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    let n = a.rows();
    if n < 2 {
        return Err(Error::shape("sr_loss_naive", ">= 2 rows", n));
    }
    let norm = |r: &[T]| r.iter().map(|v| v.to_f64().powi(2)).sum::<f64>().sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let mut node = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let dot: f64 = a
                .row(i)
                .iter()
                .zip(b.row(j))
                .map(|(x, y)| x.to_f64() * y.to_f64())
                .sum();
            node += dot / ((norm(a.row(i)) + eps) * (norm(b.row(j)) + eps));
        }
        total += node / n as f64;
    }
    Ok(total / n as f64)
}

pub fn dr_loss<T: Scalar>(tape: &mut Tape<T>, a: Var, b: Var) -> Result<Var> {
    check_pair("dr_loss", a, b, 1)?;
    let n = a.shape().0;
    let d = tape.sub(a, b)?;
    let sq = tape.square(d);
    let total = tape.reduce_sum(sq);
    Ok(tape.scale(total, T::from_f64(1.0 / n as f64)))
}

/// Enabled terms of the regularizer, each recorded separately.
#[derive(Clone, Copy, Debug)]
pub struct RegTerms {
    pub sr: Option<Var>,
    pub dr: Option<Var>,
    pub total: Var,
}

/// `use_sr · SR + use_dr · DR`.
pub fn reg_loss<T: Scalar>(
    tape: &mut Tape<T>,
    a: Var,
    b: Var,
    cfg: &RegConfig,
) -> Result<RegTerms> {
    cfg.validate()?;
    check_pair("reg_loss", a, b, 1)?;
    let sr = cfg
        .use_sr
        .then(|| sr_loss(tape, a, b, cfg.epsilon))
        .transpose()?;
    let dr = cfg.use_dr.then(|| dr_loss(tape, a, b)).transpose()?;
    let total = match (sr, dr) {
        (Some(s), Some(d)) => tape.add(s, d)?,
        (Some(t), None) | (None, Some(t)) => t,
        (None, None) => tape.constant(Matrix::zeros(1, 1)),
    };
    Ok(RegTerms { sr, dr, total })
}

/// Mean negative log-likelihood of `labels` under row log-probabilities
/// `log_probs`, over the nodes in `mask`.
pub fn cross_entropy<T: Scalar>(
    tape: &mut Tape<T>,
    log_probs: Var,
    labels: &[usize],
    mask: &[usize],
) -> Result<Var> {
    let (n, c) = log_probs.shape();
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if labels.len() != n {
        return Err(Error::shape("cross_entropy labels", n, labels.len()));
    }
    let mut pick = Matrix::zeros(n, c);
    for &i in mask {
        let y = labels[i];
        if y >= c {
            return Err(Error::LabelOutOfRange {
                node: i,
                label: y,
                num_classes: c,
            });
        }
        pick.set(i, y, pick.get(i, y) + T::ONE);
    }
    let pick = tape.constant(pick);
    let picked = tape.dot_rows(log_probs, pick)?;
    let total = tape.reduce_sum(picked);
    Ok(tape.scale(total, T::from_f64(-1.0 / mask.len() as f64)))
}

/// `CE + λ · reg`. With `λ == 0` the regularizer is left out of the graph,
/// so it contributes no gradient at all.
pub fn joint_loss<T: Scalar>(
    tape: &mut Tape<T>,
    ce: Var,
    reg: Option<Var>,
    lambda: f64,
) -> Result<Var> {
    match reg {
        Some(r) if lambda != 0.0 => {
            let r = tape.scale(r, T::from_f64(lambda));
            tape.add(ce, r)
        }
        _ => Ok(ce),
    }
}
