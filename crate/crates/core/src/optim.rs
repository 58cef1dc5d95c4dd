//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::ParamStore;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

pub struct Adam {
    config: AdamConfig,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros = |store: &ParamStore| {
            store
                .iter()
                .map(|(_, p)| Tensor::zeros(p.value.shape().to_vec()))
                .collect::<Vec<_>>()
        };
        Self {
            config,
            first_moment: zeros(store),
            second_moment: zeros(store),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every trainable parameter from its accumulated
    /// gradient; gradients are zeroed afterward. Non-finite gradients abort
    /// with the parameter's name.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let m_corr = 1.0 - c.beta1.powi(t);
        let v_corr = 1.0 - c.beta2.powi(t);

        for (idx, pid) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let p = store.get_mut(pid);
            if !p.trainable {
                continue;
            }
            if !p.grad.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("gradient of {}", p.name),
                });
            }
            let m = &mut self.first_moment[idx];
            let v = &mut self.second_moment[idx];
            for ((value, grad), (mi, vi)) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.grad.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                *mi = c.beta1 * *mi + (1.0 - c.beta1) * grad;
                *vi = c.beta2 * *vi + (1.0 - c.beta2) * grad * grad;
                let m_hat = *mi / m_corr;
                let v_hat = *vi / v_corr;
                *value -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
            p.grad.fill(0.0);
        }
        Ok(())
    }
}
