//! Small dense-network machinery shared by the GNN layers and the pairwise
//! scorer: layers, exact reverse-mode gradients for binary cross-entropy,
//! SGD/Adam updates, finite-difference verification and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod optim;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use gradcheck::finite_difference_check;
pub use optim::{OptimizerKind, OptimizerState};

/// Probability clamp keeping BCE finite.
pub const PROB_CLAMP: f64 = 1e-7;

/// Examples per gradient chunk. Chunks are reduced in index order, so the
/// result does not depend on how many threads ran them.
const GRAD_CHUNK: usize = 64;

/// Logistic function, evaluated without overflow for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// d(activation)/dz given the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }
}

/// Borrowed network input.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Dense(&'a [f64]),
    /// `(index, value)` entries with distinct indices.
    Sparse(&'a [(u32, f64)]),
}

impl Input<'_> {
    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Input::Dense(x) if x.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
                context: "network input".into(),
            }),
            Input::Sparse(x) => match x.iter().find(|(i, _)| *i as usize >= dim) {
                Some(&(i, _)) => Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i as usize + 1,
                    context: "sparse network input index".into(),
                }),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// Owned network input.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Vec<f64>),
    Sparse(Vec<(u32, f64)>),
}

impl Features {
    pub fn as_input(&self) -> Input<'_> {
        match self {
            Features::Dense(v) => Input::Dense(v),
            Features::Sparse(v) => Input::Sparse(v),
        }
    }
}

/// One fully connected layer: `activation(W x + b)` with `W` stored row-major
/// as `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot<R: Rng>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Pre-activation `W x + b`.
    pub fn affine(&self, x: Input<'_>) -> Vec<f64> {
        let mut z = self.bias.clone();
        match x {
            Input::Dense(x) => {
                for (o, zo) in z.iter_mut().enumerate() {
                    let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
                    *zo += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                }
            }
            Input::Sparse(x) => {
                for (o, zo) in z.iter_mut().enumerate() {
                    let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
                    *zo += x.iter().map(|&(i, v)| row[i as usize] * v).sum::<f64>();
                }
            }
        }
        z
    }

    /// Returns `(z, a)`.
    pub fn forward(&self, x: Input<'_>) -> (Vec<f64>, Vec<f64>) {
        let z = self.affine(x);
        let a = z.iter().map(|&v| self.activation.apply(v)).collect();
        (z, a)
    }

    /// Upstream gradient w.r.t. the output `a` → gradient w.r.t. `z`.
    pub fn dz_from_da(&self, z: &[f64], a: &[f64], da: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(a)
            .zip(da)
            .map(|((&z, &a), &d)| d * self.activation.derivative(z, a))
            .collect()
    }

    /// Accumulates parameter gradients for input `x` and `dz`; adds the input
    /// gradient `Wᵀ dz` to `dx` when given.
    pub fn backward(&self, x: Input<'_>, dz: &[f64], grad: &mut LayerGrad, dx: Option<&mut [f64]>) {
        for (o, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.bias[o] += d;
            let grow = &mut grad.weights[o * self.in_dim..(o + 1) * self.in_dim];
            match x {
                Input::Dense(x) => {
                    for (g, v) in grow.iter_mut().zip(x) {
                        *g += d * v;
                    }
                }
                Input::Sparse(x) => {
                    for &(i, v) in x {
                        grow[i as usize] += d * v;
                    }
                }
            }
        }
        if let Some(dx) = dx {
            for (o, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
                for (g, w) in dx.iter_mut().zip(row) {
                    *g += d * w;
                }
            }
        }
    }
}

/// Gradient buffers shaped like one [`Layer`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient buffers shaped like a stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(layers: &[Layer]) -> Self {
        Self {
            layers: layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x *= s);
            l.bias.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Flattened in the same order as [`flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

/// All parameters of a layer stack, layer by layer, weights then bias.
pub fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}

/// Inverse of [`flatten`].
pub fn unflatten(layers: &mut [Layer], theta: &[f64]) {
    let mut k = 0;
    for l in layers {
        let nw = l.weights.len();
        l.weights.copy_from_slice(&theta[k..k + nw]);
        k += nw;
        let nb = l.bias.len();
        l.bias.copy_from_slice(&theta[k..k + nb]);
        k += nb;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    BinaryCrossEntropy,
}

/// A weighted training example with a target in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Features,
    pub target: f64,
    pub weight: f64,
}

impl Example {
    pub fn new(input: Features, target: f64) -> Self {
        Self {
            input,
            target,
            weight: 1.0,
        }
    }
}

/// Binary cross-entropy on a clamped probability.
pub fn bce(p: f64, target: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// A feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub layers: Vec<Layer>,
}

impl DenseParams {
    /// `dims = [input, hidden..., output]`, one activation per layer.
    pub fn new<R: Rng>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Invalid(format!(
                "{} layer sizes need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Invalid("layer sizes must be positive".into()));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| Layer::glorot(w[0], w[1], a, rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("network needs at least one layer".into()));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::DimensionMismatch {
                    expected: w[0].out_dim,
                    found: w[1].in_dim,
                    context: format!("input of layer {}", i + 1),
                });
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::Invalid(format!(
                    "layer {i} storage does not match its shape"
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    pub fn forward(&self, x: Input<'_>) -> Result<Vec<f64>> {
        x.check_dim(self.input_dim())?;
        let (_, mut a) = self.layers[0].forward(x);
        for l in &self.layers[1..] {
            a = l.forward(Input::Dense(&a)).1;
        }
        Ok(a)
    }

    fn check_batch(&self, batch: &[Example], loss: Loss) -> Result<()> {
        let Loss::BinaryCrossEntropy = loss;
        if batch.is_empty() {
            return Err(Error::Invalid("empty batch".into()));
        }
        if self.output_dim() != 1 || self.layers.last().unwrap().activation != Activation::Sigmoid {
            return Err(Error::Invalid(
                "binary cross-entropy needs a single sigmoid output".into(),
            ));
        }
        for ex in batch {
            ex.input.as_input().check_dim(self.input_dim())?;
            if ex.target != 0.0 && ex.target != 1.0 {
                return Err(Error::Invalid(format!(
                    "target {} not in {{0, 1}}",
                    ex.target
                )));
            }
            if !(ex.weight > 0.0 && ex.weight.is_finite()) {
                return Err(Error::Invalid(format!("weight {} not positive", ex.weight)));
            }
        }
        Ok(())
    }

    /// Weighted-mean loss over a batch, without gradients.
    pub fn loss(&self, batch: &[Example], loss: Loss) -> Result<f64> {
        self.check_batch(batch, loss)?;
        let total_w: f64 = batch.iter().map(|e| e.weight).sum();
        let mut acc = 0.0;
        for ex in batch {
            let p = self.forward(ex.input.as_input())?[0];
            acc += ex.weight * bce(p, ex.target);
        }
        Ok(acc / total_w)
    }

    /// Exact gradients of the weighted-mean loss (weights normalized by their
    /// sum) and the loss itself.
    pub fn grad(&self, batch: &[Example], loss: Loss) -> Result<(Gradients, f64)> {
        self.check_batch(batch, loss)?;
        let total_w: f64 = batch.iter().map(|e| e.weight).sum();
        let partials: Vec<Result<(Gradients, f64)>> = batch
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut g = Gradients::zeros_like(&self.layers);
                let mut l = 0.0;
                for ex in chunk {
                    l += self.accumulate(ex, total_w, &mut g)?;
                }
                Ok((g, l))
            })
            .collect();
        let mut grads = Gradients::zeros_like(&self.layers);
        let mut total = 0.0;
        for p in partials {
            let (g, l) = p?;
            grads.add_assign(&g);
            total += l;
        }
        Ok((grads, total / total_w))
    }

    /// Backprop of one example; returns its weighted loss contribution.
    fn accumulate(&self, ex: &Example, total_w: f64, grads: &mut Gradients) -> Result<f64> {
        let n = self.layers.len();
        let mut zs = Vec::with_capacity(n);
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n);
        for (i, l) in self.layers.iter().enumerate() {
            let (z, a) = if i == 0 {
                l.forward(ex.input.as_input())
            } else {
                l.forward(Input::Dense(&acts[i - 1]))
            };
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("activation of layer {i}")));
            }
            zs.push(z);
            acts.push(a);
        }
        let p = acts[n - 1][0];
        let w = ex.weight / total_w;
        // sigmoid output with BCE: dL/dz = p - y
        let mut dz = vec![w * (p - ex.target)];
        for i in (0..n).rev() {
            let l = &self.layers[i];
            if i == 0 {
                l.backward(ex.input.as_input(), &dz, &mut grads.layers[0], None);
            } else {
                let mut da = vec![0.0; l.in_dim];
                l.backward(
                    Input::Dense(&acts[i - 1]),
                    &dz,
                    &mut grads.layers[i],
                    Some(&mut da),
                );
                let prev = &self.layers[i - 1];
                dz = prev.dz_from_da(&zs[i - 1], &acts[i - 1], &da);
            }
        }
        Ok(ex.weight * bce(p, ex.target))
    }
}
