use rand::Rng;

use super::params::ParamStore;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::seed;

/// Above this many scalars only a seeded sample of coordinates is perturbed.
pub const FULL_CHECK_LIMIT: usize = 10_000;
const SAMPLED_COORDS: usize = 2_000;

/// Denominator floor of the relative error, so coordinates whose true
/// derivative is ~0 are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// `(param name, flat index)` of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// Compares reverse-mode gradients of `f` against central differences.
///
/// `f` records a scalar loss on a fresh tape from the parameter vars it is
/// handed; it must be deterministic (fixed dropout seeds give the same mask
/// on every evaluation). The error per coordinate is
/// `|analytic − numeric| / max(|analytic|, |numeric|, REL_ERROR_FLOOR)`.
pub fn grad_check<F>(params: &ParamStore<f64>, f: F, delta: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    grad_check_store(
        params,
        |tape, p| {
            let vars = tape.params(p);
            f(tape, &vars)
        },
        delta,
    )
}

/// Like [`grad_check`], but `f` reads parameters from the (perturbed)
/// store itself, e.g. through a model's own forward pass.
pub fn grad_check_store<F>(params: &ParamStore<f64>, f: F, delta: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let eval = |p: &ParamStore<f64>| -> Result<f64> {
        let mut tape = Tape::new(true);
        let loss = f(&mut tape, p)?;
        if loss.shape() != (1, 1) {
            return Err(Error::shape(
                "grad_check",
                "(1, 1)",
                format!("{:?}", loss.shape()),
            ));
        }
        Ok(tape.scalar(loss))
    };

    let mut tape = Tape::new(true);
    let loss = f(&mut tape, params)?;
    let analytic = tape.backward(loss)?.for_params(params);

    let mut coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(p, prm)| (0..prm.value.data().len()).map(move |i| (p, i)))
        .collect();
    if coords.len() > FULL_CHECK_LIMIT {
        let mut rng = seed::rng(0x6772_6164);
        coords = (0..SAMPLED_COORDS)
            .map(|_| coords[rng.random_range(0..coords.len())])
            .collect();
    }

    let ids: Vec<_> = params.ids().collect();
    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst: None,
    };
    for (p, i) in coords {
        let id = ids[p];
        let orig = work.value(id).data()[i];
        work.value_mut(id).data_mut()[i] = orig + delta;
        let up = eval(&work)?;
        work.value_mut(id).data_mut()[i] = orig - delta;
        let down = eval(&work)?;
        work.value_mut(id).data_mut()[i] = orig;

        let numeric = (up - down) / (2.0 * delta);
        let a = analytic[p].data()[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = err;
            report.worst = Some((params.param(id).name.clone(), i));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::Matrix;

    #[test]
    fn quadratic_is_exact() {
        let mut p = ParamStore::new();
        p.add(
            "w",
            Matrix::from_fn(3, 2, |i, j| 0.3 * i as f64 - 0.7 * j as f64 + 0.1),
        );
        let target = Matrix::from_fn(3, 2, |i, j| (i + j) as f64 * 0.2);
        let r = grad_check(
            &p,
            |t, v| {
                let c = t.constant(target.clone());
                let d = t.sub(v[0], c)?;
                let s = t.square(d);
                Ok(t.reduce_sum(s))
            },
            1e-4,
        )
        .unwrap();
        assert_eq!(r.checked, 6);
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }

    #[test]
    fn dropout_with_fixed_seed_passes() {
        let mut p = ParamStore::new();
        p.add(
            "w",
            Matrix::from_fn(4, 3, |i, j| ((i * 3 + j) as f64).sin()),
        );
        let r = grad_check(
            &p,
            |t, v| {
                let d = t.dropout(v[0], 0.4, 17)?;
                let s = t.square(d);
                Ok(t.reduce_mean(s))
            },
            1e-4,
        )
        .unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }
}
