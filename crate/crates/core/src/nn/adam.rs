use ndarray::ArrayD;

use super::Parameters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam. Moment buffers are created on the first step and
/// follow the parameter enumeration order.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.named();
        let mut params = params.named_mut();
        if grads.len() != params.len() {
            return Err(Error::ShapeMismatch {
                name: "parameter list".into(),
                expected: vec![params.len()],
                found: vec![grads.len()],
            });
        }
        for ((name, p), (_, g)) in params.iter().zip(&grads) {
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch {
                    name: name.clone(),
                    expected: p.shape().to_vec(),
                    found: g.shape().to_vec(),
                });
            }
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|(_, p)| ArrayD::zeros(p.shape())).collect();
            self.v = self.m.clone();
        } else if self.m.len() != params.len()
            || self.m.iter().zip(&params).any(|(m, (_, p))| m.shape() != p.shape())
        {
            return Err(Error::ShapeMismatch {
                name: "optimizer state".into(),
                expected: vec![self.m.len()],
                found: vec![params.len()],
            });
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(self.t as i32);
        let bias2 = 1.0 - beta2.powi(self.t as i32);
        for (((_, p), (_, g)), (m, v)) in params
            .iter_mut()
            .zip(&grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            ndarray::Zip::from(p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
                });
        }
        Ok(())
    }
}
