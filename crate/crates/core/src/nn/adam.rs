use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{ParamSet, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub moments: IndexMap<String, (Tensor2, Tensor2)>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: IndexMap::new(),
        }
    }

    /// Bias-corrected Adam update of every parameter, then clears gradients.
    pub fn step(&mut self, params: &mut ParamSet) {
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (name, p) in params.iter_mut() {
            if !self.moments.contains_key(name) {
                let zeros = Tensor2::zeros(p.value.rows(), p.value.cols());
                self.moments.insert(name.to_string(), (zeros.clone(), zeros));
            }
            let (m, v) = self.moments.get_mut(name).expect("inserted above");
            let theta = p.value.data_mut().iter_mut();
            let grads = p.grad.data_mut().iter_mut();
            for (((w, g), mi), vi) in theta.zip(grads).zip(m.data_mut()).zip(v.data_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * *g;
                *vi = beta2 * *vi + (1.0 - beta2) * *g * *g;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
                *g = 0.0;
            }
        }
    }
}

/// One Adam update; see [`AdamState::step`].
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState) {
    state.step(params);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(v: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert("theta", Tensor2::filled(1, 1, v)).unwrap();
        ps
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut ps = scalar_set(0.3);
        let mut st = AdamState::new(AdamConfig::default());
        adam_step(&mut ps, &mut st);
        assert_eq!(ps.value("theta").data(), &[0.3]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let mut ps = scalar_set(0.0);
        ps.accumulate("theta", &Tensor2::filled(1, 1, 1.0)).unwrap();
        let mut st = AdamState::new(AdamConfig::default());
        adam_step(&mut ps, &mut st);
        // m̂ = 1, v̂ = 1 after bias correction
        let want = -1e-4 / (1.0 + 1e-8);
        assert!((ps.value("theta").get(0, 0) - want).abs() < 1e-20);
        assert_eq!(ps.grad("theta").data(), &[0.0]);
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let run = || {
            let mut ps = ParamSet::new();
            ps.insert("w", Tensor2::from_rows(&[&[0.1, -0.2], &[0.3, 0.4]])).unwrap();
            let mut st = AdamState::new(AdamConfig::default());
            for k in 0..100 {
                let g = ps.value("w").map(|v| (v * 3.0 + k as f64 * 0.01).sin());
                ps.accumulate("w", &g).unwrap();
                st.step(&mut ps);
            }
            ps
        };
        let (a, b) = (run(), run());
        let bits = |p: &ParamSet| p.value("w").data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
