use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use crate::dense::Matrix;
use crate::scalar::Scalar;

/// How weight decay enters the update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecayMode {
    /// `θ ← θ − lr·wd·θ` next to the Adam step (AdamW).
    #[default]
    Decoupled,
    /// `wd·θ` added to the gradient before the moment updates.
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub decay_mode: DecayMode,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            decay_mode: DecayMode::Decoupled,
        }
    }
}

/// Bias-corrected Adam with per-parameter moment buffers.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &ParamStore<T>) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            config,
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &Matrix<T> {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &Matrix<T> {
        &self.v[i]
    }

    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &[Matrix<T>]) {
        assert_eq!(grads.len(), self.m.len(), "one gradient per parameter");
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = T::from_f64(1.0 - c.beta1.powi(t));
        let bc2 = T::from_f64(1.0 - c.beta2.powi(t));
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (lr, eps) = (T::from_f64(c.lr), T::from_f64(c.eps));

        let ids: Vec<_> = params.ids().collect();
        for (k, id) in ids.into_iter().enumerate() {
            let wd = T::from_f64(params.param(id).weight_decay.unwrap_or(c.weight_decay));
            let theta = params.value_mut(id).data_mut();
            let g = grads[k].data();
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for i in 0..theta.len() {
                let mut gi = g[i];
                if c.decay_mode == DecayMode::L2 {
                    gi += wd * theta[i];
                }
                m[i] = b1 * m[i] + (T::ONE - b1) * gi;
                v[i] = b2 * v[i] + (T::ONE - b2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                if c.decay_mode == DecayMode::Decoupled {
                    theta[i] -= lr * wd * theta[i];
                }
                theta[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_by_hand() {
        let mut p = ParamStore::<f64>::new();
        p.add("theta", Matrix::zeros(1, 1));
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(cfg, &p);
        adam.step(&mut p, &[Matrix::filled(1, 1, 1.0)]);
        assert!((adam.first_moment(0).get(0, 0) - 0.1).abs() < 1e-15);
        assert!((adam.second_moment(0).get(0, 0) - 0.001).abs() < 1e-15);
        let expect = -0.1 / (1.0 + 1e-8);
        assert!((p.value(p.find("theta").unwrap()).get(0, 0) - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_no_decay_is_fixed_point() {
        let mut p = ParamStore::<f32>::new();
        p.add("w", Matrix::from_fn(2, 3, |i, j| i as f32 - j as f32));
        let before = p.clone();
        let mut adam = AdamState::new(AdamConfig::default(), &p);
        for _ in 0..5 {
            adam.step(&mut p, &[Matrix::zeros(2, 3)]);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn decoupled_decay_shrinks_without_gradient() {
        let mut p = ParamStore::<f64>::new();
        p.add("w", Matrix::filled(1, 1, 2.0));
        let cfg = AdamConfig {
            lr: 0.1,
            weight_decay: 0.5,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(cfg, &p);
        adam.step(&mut p, &[Matrix::zeros(1, 1)]);
        assert!((p.value(p.find("w").unwrap()).get(0, 0) - 1.9).abs() < 1e-15);
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let run = || {
            let mut p = ParamStore::<f32>::new();
            p.add("w", Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f32 * 0.1));
            let mut adam = AdamState::new(
                AdamConfig {
                    weight_decay: 1e-3,
                    ..Default::default()
                },
                &p,
            );
            for s in 0..20 {
                let g = Matrix::from_fn(3, 3, |i, j| ((i + j + s) as f32).sin());
                adam.step(&mut p, &[g]);
            }
            p
        };
        assert_eq!(run(), run());
    }
}
