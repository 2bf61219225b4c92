//! Adam optimizer with bias correction, keyed moment buffers per
//! parameter tensor.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment buffers are created lazily on the first update of each named
/// tensor and must keep their shape afterwards. One `begin_step` per
/// optimizer step advances the shared bias-correction counter for all
/// tensors updated within that step.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: u64,
    moments: HashMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            step: 0,
            moments: HashMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    pub fn update(&mut self, name: &str, param: &mut [f64], grad: &[f64]) -> Result<()> {
        if self.step == 0 {
            return Err(Error::InvalidSpec(
                "optimizer update before begin_step".to_string(),
            ));
        }
        if param.len() != grad.len() {
            return Err(Error::LengthMismatch {
                op: "adam_update",
                expected: param.len(),
                got: grad.len(),
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                what: "gradient",
                param: name.to_string(),
                step: self.step,
            });
        }
        let (m, v) = self
            .moments
            .entry(name.to_string())
            .or_insert_with(|| (vec![0.0; param.len()], vec![0.0; param.len()]));
        if m.len() != param.len() {
            return Err(Error::LengthMismatch {
                op: "adam_moments",
                expected: m.len(),
                got: param.len(),
            });
        }
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let corr1 = 1.0 - b1.powi(self.step as i32);
        let corr2 = 1.0 - b2.powi(self.step as i32);
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / corr1;
            let v_hat = v[i] / corr2;
            param[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
            if !param[i].is_finite() {
                return Err(Error::Diverged {
                    what: "parameter",
                    param: name.to_string(),
                    step: self.step,
                });
            }
        }
        Ok(())
    }
}
