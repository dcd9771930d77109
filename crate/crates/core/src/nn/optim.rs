use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{Gradients, Layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

/// Optimizer hyperparameters plus Adam's moment accumulators, one pair of
/// buffers (weights, bias) per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn sgd(lr: f64) -> Self {
        Self::new(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(OptimizerKind::Adam, lr)
    }

    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    fn ensure_buffers(&mut self, layers: &[Layer]) {
        if self.first.is_empty() {
            for l in layers {
                self.first.push(vec![0.0; l.weights.len()]);
                self.first.push(vec![0.0; l.bias.len()]);
            }
            self.second = self.first.clone();
        }
    }

    /// Applies one update in place.
    pub fn apply(&mut self, layers: &mut [Layer], grads: &Gradients) -> Result<()> {
        if grads.layers.len() != layers.len()
            || layers
                .iter()
                .zip(&grads.layers)
                .any(|(l, g)| l.weights.len() != g.weights.len() || l.bias.len() != g.bias.len())
        {
            return Err(Error::Invalid(
                "gradient shapes do not match parameters".into(),
            ));
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (l, g) in layers.iter_mut().zip(&grads.layers) {
                    for (p, d) in l.weights.iter_mut().zip(&g.weights) {
                        *p -= self.lr * d;
                    }
                    for (p, d) in l.bias.iter_mut().zip(&g.bias) {
                        *p -= self.lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                self.ensure_buffers(layers);
                let t = self.step as i32;
                let c1 = 1.0 - self.beta1.powi(t);
                let c2 = 1.0 - self.beta2.powi(t);
                let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
                let params = layers
                    .iter_mut()
                    .zip(&grads.layers)
                    .flat_map(|(l, g)| [(&mut l.weights, &g.weights), (&mut l.bias, &g.bias)]);
                for (((p, g), m), v) in params.zip(&mut self.first).zip(&mut self.second) {
                    for i in 0..p.len() {
                        let gi = g[i];
                        m[i] = b1 * m[i] + (1.0 - b1) * gi;
                        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                        let mhat = m[i] / c1;
                        let vhat = v[i] / c2;
                        p[i] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
