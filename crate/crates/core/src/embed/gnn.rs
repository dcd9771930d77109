//! Inductive message-passing GNN with two aggregation schemes.
//!
//! Each layer computes, for a node `v` with previous-layer state `x_v`,
//!
//! ```text
//! h_v = normalize(activation(W_self · x_v + W_neigh · agg(v) + b))
//! ```
//!
//! stored as a single [`Layer`] over the concatenation `[x_v, agg(v)]`.
//! `SageMean` aggregates all (sampled) neighbors by their mean;
//! `CombSage` splits them into the connected components of the subgraph they
//! induce, averages within each component and combines the component means.
//!
//! Training is unsupervised link prediction: for each edge `(u, v)` the
//! score `σ(h_u · h_v)` is pushed toward 1 and `σ(h_u · h_n)` toward 0 for
//! uniformly drawn negatives `n`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::embed::aggregate::{combine_in_order, mean_in_order, Combine};
use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::matrix::EmbeddingMatrix;
use crate::nn::checkpoint::{field, header_fields, parse_field, read_layers, write_layers};
use crate::nn::{bce, sigmoid, Activation, Gradients, Input, Layer, OptimizerState};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Architecture {
    SageMean,
    CombSage,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::SageMean => "sage-mean",
            Architecture::CombSage => "combsage",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sage-mean" => Ok(Architecture::SageMean),
            "combsage" => Ok(Architecture::CombSage),
            _ => Err(Error::Config(format!("unknown GNN architecture {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnSpec {
    pub arch: Architecture,
    /// Output width of each layer; the last one is the embedding dimension.
    pub dims: Vec<usize>,
    /// `samples[h]` neighbors are drawn at hop `h + 1` from the target.
    pub samples: Vec<usize>,
    pub activation: Activation,
    pub combine: Combine,
    pub normalize: bool,
}

impl GnnSpec {
    pub fn new(arch: Architecture) -> Self {
        Self {
            arch,
            dims: vec![128, 128],
            samples: vec![25, 10],
            activation: Activation::Sigmoid,
            combine: Combine::Mean,
            normalize: true,
        }
    }

    pub fn depth(&self) -> usize {
        self.dims.len()
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config("GNN layer widths must be positive".into()));
        }
        if self.samples.len() != self.dims.len() || self.samples.contains(&0) {
            return Err(Error::Config(format!(
                "GNN needs one positive sample size per layer ({} layers, {} sizes)",
                self.dims.len(),
                self.samples.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnTrainConfig {
    pub epochs: usize,
    /// Edges per minibatch.
    pub batch_size: usize,
    /// Negatives per positive edge.
    pub negatives: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GnnTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 512,
            negatives: 5,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GnnTrainReport {
    /// Mean minibatch loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

/// A minibatch of positive edges with their negatives, by graph index.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBatch {
    pub edges: Vec<(u32, u32)>,
    pub negatives: Vec<Vec<u32>>,
    pub sample_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub spec: GnnSpec,
    pub input_dim: usize,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy)]
enum Neighborhood {
    Sampled(u64),
    Full,
}

struct PlanNode {
    self_pos: u32,
    /// Neighbor positions in the level below, one list per component.
    comps: Vec<Vec<u32>>,
}

/// Nodes needed at each depth: `levels[0]` are raw features,
/// `levels[depth]` the targets.
struct Plan {
    levels: Vec<Vec<u32>>,
    nodes: Vec<Vec<PlanNode>>,
}

struct LayerCache {
    inputs: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

struct Forward {
    /// Row-major states per level.
    states: Vec<Vec<f64>>,
    caches: Vec<LayerCache>,
}

/// Maps graph nodes to rows of a feature matrix.
struct FeatureTable<'a> {
    features: &'a EmbeddingMatrix,
    rows: Vec<usize>,
}

impl<'a> FeatureTable<'a> {
    fn new(g: &GraphSnapshot, features: &'a EmbeddingMatrix, input_dim: usize) -> Result<Self> {
        if features.dim() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                found: features.dim(),
                context: "GNN input features".into(),
            });
        }
        let mut rows = Vec::with_capacity(g.node_count());
        let mut missing = Vec::new();
        for id in g.ids() {
            match features.index_of(id) {
                Some(r) => rows.push(r),
                None => {
                    missing.push(id.clone());
                    rows.push(usize::MAX);
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::Invalid(format!(
                "{} graph nodes lack features (first: {:?})",
                missing.len(),
                missing[0]
            )));
        }
        Ok(Self { features, rows })
    }

    fn row(&self, node: u32) -> Vec<f64> {
        self.features.dense_row(self.rows[node as usize])
    }
}

fn position(level: &[u32], node: u32) -> u32 {
    level.binary_search(&node).expect("planned node present") as u32
}

impl GnnModel {
    pub fn init(spec: GnnSpec, input_dim: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        if input_dim == 0 {
            return Err(Error::Invalid(
                "GNN input dimension must be positive".into(),
            ));
        }
        let mut rng = seed::rng(seed);
        let mut layers = Vec::with_capacity(spec.depth());
        let mut prev = input_dim;
        for &d in &spec.dims {
            layers.push(Layer::glorot(2 * prev, d, spec.activation, &mut rng));
            prev = d;
        }
        Ok(Self {
            spec,
            input_dim,
            layers,
        })
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.dims.last().unwrap()
    }

    fn dim_at(&self, level: usize) -> usize {
        if level == 0 {
            self.input_dim
        } else {
            self.spec.dims[level - 1]
        }
    }

    fn plan(&self, g: &GraphSnapshot, targets: &[u32], hood: Neighborhood) -> Plan {
        let depth = self.spec.depth();
        let mut levels = vec![Vec::new(); depth + 1];
        let mut t = targets.to_vec();
        t.sort_unstable();
        t.dedup();
        levels[depth] = t;
        let mut neighbor_lists: Vec<Vec<Vec<u32>>> = vec![Vec::new(); depth + 1];
        for l in (1..=depth).rev() {
            let hop = depth - l;
            let lists: Vec<Vec<u32>> = levels[l]
                .iter()
                .map(|&v| match hood {
                    Neighborhood::Sampled(s) => g.sample_adjacent(
                        v as usize,
                        self.spec.samples[hop],
                        seed::derive_index(s, l as u64),
                    ),
                    Neighborhood::Full => g.adjacent(v as usize).to_vec(),
                })
                .collect();
            let mut below = levels[l].clone();
            for list in &lists {
                below.extend_from_slice(list);
            }
            below.sort_unstable();
            below.dedup();
            levels[l - 1] = below;
            neighbor_lists[l] = lists;
        }
        let arch = self.spec.arch;
        let nodes = (1..=depth)
            .map(|l| {
                levels[l]
                    .par_iter()
                    .zip(neighbor_lists[l].par_iter())
                    .map(|(&v, list)| {
                        let groups = match arch {
                            _ if list.is_empty() => Vec::new(),
                            Architecture::SageMean => vec![list.clone()],
                            Architecture::CombSage => g.induced_components(list),
                        };
                        PlanNode {
                            self_pos: position(&levels[l - 1], v),
                            comps: groups
                                .into_iter()
                                .map(|c| {
                                    c.into_iter().map(|u| position(&levels[l - 1], u)).collect()
                                })
                                .collect(),
                        }
                    })
                    .collect()
            })
            .collect();
        Plan { levels, nodes }
    }

    fn aggregate(&self, node: &PlanNode, prev: &[f64], dim: usize) -> Vec<f64> {
        let means: Vec<Vec<f64>> = node
            .comps
            .iter()
            .map(|c| {
                mean_in_order(
                    c.iter()
                        .map(|&p| &prev[p as usize * dim..(p as usize + 1) * dim]),
                    dim,
                )
            })
            .collect();
        combine_in_order(&means, dim, self.spec.combine)
    }

    fn forward(&self, plan: &Plan, table: &FeatureTable<'_>) -> Forward {
        let depth = self.spec.depth();
        let mut states = Vec::with_capacity(depth + 1);
        let base: Vec<f64> = plan.levels[0].iter().flat_map(|&v| table.row(v)).collect();
        states.push(base);
        let mut caches = Vec::with_capacity(depth);
        for l in 1..=depth {
            let layer = &self.layers[l - 1];
            let din = self.dim_at(l - 1);
            let prev = &states[l - 1];
            let per_node: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = plan.nodes[l - 1]
                .par_iter()
                .map(|node| {
                    let sp = node.self_pos as usize;
                    let mut input = prev[sp * din..(sp + 1) * din].to_vec();
                    input.extend(self.aggregate(node, prev, din));
                    let (z, a) = layer.forward(Input::Dense(&input));
                    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let h = if self.spec.normalize && norm > 0.0 {
                        a.iter().map(|x| x / norm).collect()
                    } else {
                        a.clone()
                    };
                    (input, z, a, h, norm)
                })
                .collect();
            let mut cache = LayerCache {
                inputs: Vec::with_capacity(per_node.len()),
                z: Vec::with_capacity(per_node.len()),
                a: Vec::with_capacity(per_node.len()),
                norms: Vec::with_capacity(per_node.len()),
            };
            let mut state = Vec::with_capacity(per_node.len() * layer.out_dim);
            for (input, z, a, h, norm) in per_node {
                cache.inputs.push(input);
                cache.z.push(z);
                cache.a.push(a);
                cache.norms.push(norm);
                state.extend(h);
            }
            states.push(state);
            caches.push(cache);
        }
        Forward { states, caches }
    }

    /// Link-prediction loss on a batch; also returns the gradient w.r.t. the
    /// target states when `want_grad` is set.
    fn batch_objective(
        &self,
        plan: &Plan,
        fwd: &Forward,
        batch: &EdgeBatch,
        want_grad: bool,
    ) -> (f64, Vec<f64>) {
        let depth = self.spec.depth();
        let d = self.output_dim();
        let top = &plan.levels[depth];
        let h = &fwd.states[depth];
        let row = |p: u32| &h[p as usize * d..(p as usize + 1) * d];
        let mut dh = if want_grad {
            vec![0.0; h.len()]
        } else {
            Vec::new()
        };
        let scale = 1.0 / batch.edges.len() as f64;
        let mut loss = 0.0;
        for (e, &(u, v)) in batch.edges.iter().enumerate() {
            let pu = position(top, u);
            let others =
                std::iter::once((v, 1.0)).chain(batch.negatives[e].iter().map(|&n| (n, 0.0)));
            for (o, label) in others {
                let po = position(top, o);
                let s: f64 = row(pu).iter().zip(row(po)).map(|(a, b)| a * b).sum();
                let p = sigmoid(s);
                loss += scale * bce(p, label);
                if want_grad {
                    let gs = scale * (p - label);
                    for j in 0..d {
                        dh[pu as usize * d + j] += gs * h[po as usize * d + j];
                        dh[po as usize * d + j] += gs * h[pu as usize * d + j];
                    }
                }
            }
        }
        (loss, dh)
    }

    fn backward(&self, plan: &Plan, fwd: &Forward, mut dstate: Vec<f64>) -> Gradients {
        let mut grads = Gradients::zeros_like(&self.layers);
        for l in (1..=self.spec.depth()).rev() {
            let layer = &self.layers[l - 1];
            let dout = layer.out_dim;
            let din = self.dim_at(l - 1);
            let cache = &fwd.caches[l - 1];
            let prev = &fwd.states[l - 1];
            let mut dprev = vec![0.0; prev.len()];
            for (i, node) in plan.nodes[l - 1].iter().enumerate() {
                let dh = &dstate[i * dout..(i + 1) * dout];
                if dh.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let a = &cache.a[i];
                let norm = cache.norms[i];
                let da: Vec<f64> = if self.spec.normalize && norm > 0.0 {
                    let h = &fwd.states[l][i * dout..(i + 1) * dout];
                    let proj: f64 = h.iter().zip(dh).map(|(x, y)| x * y).sum();
                    dh.iter()
                        .zip(h)
                        .map(|(g, x)| (g - x * proj) / norm)
                        .collect()
                } else {
                    dh.to_vec()
                };
                let dz = layer.dz_from_da(&cache.z[i], a, &da);
                let mut dinput = vec![0.0; 2 * din];
                layer.backward(
                    Input::Dense(&cache.inputs[i]),
                    &dz,
                    &mut grads.layers[l - 1],
                    Some(&mut dinput),
                );

                let sp = node.self_pos as usize;
                for (t, g) in dprev[sp * din..(sp + 1) * din]
                    .iter_mut()
                    .zip(&dinput[..din])
                {
                    *t += g;
                }
                self.aggregate_backward(node, prev, din, &dinput[din..], &mut dprev);
            }
            dstate = dprev;
        }
        grads
    }

    fn aggregate_backward(
        &self,
        node: &PlanNode,
        prev: &[f64],
        dim: usize,
        dagg: &[f64],
        dprev: &mut [f64],
    ) {
        let k = node.comps.len();
        if k == 0 {
            return;
        }
        let comp_grads: Vec<Vec<f64>> = match self.spec.combine {
            Combine::Mean => vec![dagg.iter().map(|g| g / k as f64).collect(); k],
            Combine::Sum => vec![dagg.to_vec(); k],
            Combine::Max => {
                let means: Vec<Vec<f64>> = node
                    .comps
                    .iter()
                    .map(|c| {
                        mean_in_order(
                            c.iter()
                                .map(|&p| &prev[p as usize * dim..(p as usize + 1) * dim]),
                            dim,
                        )
                    })
                    .collect();
                let mut out = vec![vec![0.0; dim]; k];
                for j in 0..dim {
                    let mut best = 0;
                    for c in 1..k {
                        if means[c][j] > means[best][j] {
                            best = c;
                        }
                    }
                    out[best][j] = dagg[j];
                }
                out
            }
        };
        for (comp, g) in node.comps.iter().zip(comp_grads) {
            let share = 1.0 / comp.len() as f64;
            for &p in comp {
                let p = p as usize;
                for (t, x) in dprev[p * dim..(p + 1) * dim].iter_mut().zip(&g) {
                    *t += x * share;
                }
            }
        }
    }

    fn batch_targets(batch: &EdgeBatch) -> Vec<u32> {
        batch
            .edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .chain(batch.negatives.iter().flatten().copied())
            .collect()
    }

    fn check_batch(g: &GraphSnapshot, batch: &EdgeBatch) -> Result<()> {
        if batch.edges.is_empty() || batch.negatives.len() != batch.edges.len() {
            return Err(Error::Invalid(
                "edge batch needs one negative list per edge".into(),
            ));
        }
        let n = g.node_count() as u32;
        if Self::batch_targets(batch).iter().any(|&v| v >= n) {
            return Err(Error::Invalid(
                "edge batch names a node outside the graph".into(),
            ));
        }
        Ok(())
    }

    /// Mean link-prediction loss of a batch (neighbor samples fixed by
    /// `batch.sample_seed`).
    pub fn batch_loss(
        &self,
        g: &GraphSnapshot,
        features: &EmbeddingMatrix,
        batch: &EdgeBatch,
    ) -> Result<f64> {
        Self::check_batch(g, batch)?;
        let table = FeatureTable::new(g, features, self.input_dim)?;
        let plan = self.plan(
            g,
            &Self::batch_targets(batch),
            Neighborhood::Sampled(batch.sample_seed),
        );
        let fwd = self.forward(&plan, &table);
        Ok(self.batch_objective(&plan, &fwd, batch, false).0)
    }

    /// Loss and exact parameter gradients for one batch.
    pub fn batch_loss_and_grad(
        &self,
        g: &GraphSnapshot,
        features: &EmbeddingMatrix,
        batch: &EdgeBatch,
    ) -> Result<(f64, Gradients)> {
        Self::check_batch(g, batch)?;
        let table = FeatureTable::new(g, features, self.input_dim)?;
        self.loss_and_grad_with(g, &table, batch)
    }

    fn loss_and_grad_with(
        &self,
        g: &GraphSnapshot,
        table: &FeatureTable<'_>,
        batch: &EdgeBatch,
    ) -> Result<(f64, Gradients)> {
        let plan = self.plan(
            g,
            &Self::batch_targets(batch),
            Neighborhood::Sampled(batch.sample_seed),
        );
        let fwd = self.forward(&plan, table);
        let (loss, dh) = self.batch_objective(&plan, &fwd, batch, true);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("link-prediction loss {loss}")));
        }
        Ok((loss, self.backward(&plan, &fwd, dh)))
    }

    pub fn to_checkpoint(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "gnn arch={} depth={} input_dim={} dims={} samples={} activation={} combine={} normalize={}\n",
            self.spec.arch,
            self.spec.depth(),
            self.input_dim,
            join(&self.spec.dims),
            join(&self.spec.samples),
            self.spec.activation,
            self.spec.combine,
            self.spec.normalize
        );
        write_layers(&mut out, &self.layers);
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines
            .next()
            .filter(|l| l.starts_with("gnn "))
            .ok_or_else(|| Error::Invalid("not a GNN checkpoint".into()))?;
        let f = header_fields(head);
        let list = |key: &str| -> Result<Vec<usize>> {
            field(&f, key)?
                .split(',')
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Invalid(format!("bad {key} list")))
                })
                .collect()
        };
        let spec = GnnSpec {
            arch: field(&f, "arch")?.parse()?,
            dims: list("dims")?,
            samples: list("samples")?,
            activation: field(&f, "activation")?.parse()?,
            combine: field(&f, "combine")?.parse()?,
            normalize: parse_field(&f, "normalize")?,
        };
        spec.validate()?;
        let depth: usize = parse_field(&f, "depth")?;
        let input_dim: usize = parse_field(&f, "input_dim")?;
        let layers = read_layers(&mut lines)?;
        if depth != spec.depth() || layers.len() != depth {
            return Err(Error::Invalid(
                "GNN checkpoint depth disagrees with its layers".into(),
            ));
        }
        let mut prev = input_dim;
        for (l, &d) in layers.iter().zip(&spec.dims) {
            if l.in_dim != 2 * prev || l.out_dim != d {
                return Err(Error::Invalid(
                    "GNN checkpoint layer shapes do not compose".into(),
                ));
            }
            prev = d;
        }
        Ok(Self {
            spec,
            input_dim,
            layers,
        })
    }
}

/// Trains a fresh model on the undirected edges of `g`.
pub fn gnn_train(
    g: &GraphSnapshot,
    features: &EmbeddingMatrix,
    spec: &GnnSpec,
    cfg: &GnnTrainConfig,
) -> Result<(GnnModel, GnnTrainReport)> {
    if cfg.batch_size == 0 || cfg.negatives == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config(
            "GNN batch_size, negatives and learning_rate must be positive".into(),
        ));
    }
    let mut model = GnnModel::init(
        spec.clone(),
        features.dim(),
        seed::derive(cfg.seed, "gnn/init"),
    )?;
    let table = FeatureTable::new(g, features, model.input_dim)?;
    let mut edges = g.undirected_edges();
    let n = g.node_count() as u32;
    if edges.is_empty() || n < 3 {
        return Err(Error::Invalid(
            "GNN training needs at least one edge and three nodes".into(),
        ));
    }
    let mut opt = OptimizerState::adam(cfg.learning_rate);
    let mut report = GnnTrainReport::default();
    for epoch in 0..cfg.epochs {
        let epoch_seed = seed::derive_index(seed::derive(cfg.seed, "gnn/epoch"), epoch as u64);
        let mut rng = seed::rng(epoch_seed);
        edges.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in edges.chunks(cfg.batch_size).enumerate() {
            let negatives = chunk
                .iter()
                .map(|&(u, v)| {
                    (0..cfg.negatives)
                        .map(|_| loop {
                            let x = rng.gen_range(0..n);
                            if x != u && x != v {
                                break x;
                            }
                        })
                        .collect()
                })
                .collect();
            let batch = EdgeBatch {
                edges: chunk.to_vec(),
                negatives,
                sample_seed: seed::derive_index(epoch_seed, b as u64),
            };
            let (loss, grads) =
                model
                    .loss_and_grad_with(g, &table, &batch)
                    .map_err(|e| match e {
                        Error::NonFinite(m) => {
                            Error::NonFinite(format!("epoch {epoch}, batch {b}: {m}"))
                        }
                        e => e,
                    })?;
            opt.apply(&mut model.layers, &grads)?;
            total += loss * chunk.len() as f64;
            report.steps += 1;
        }
        let mean = total / edges.len() as f64;
        log::debug!("{} epoch {epoch}: loss {mean:.5}", spec.arch);
        report.epoch_losses.push(mean);
    }
    Ok((model, report))
}

/// Full-neighborhood embeddings of `nodes`, which may include nodes the
/// model never saw during training.
pub fn gnn_infer(
    model: &GnnModel,
    g: &GraphSnapshot,
    features: &EmbeddingMatrix,
    nodes: &[String],
) -> Result<EmbeddingMatrix> {
    let table = FeatureTable::new(g, features, model.input_dim)?;
    let mut targets = Vec::with_capacity(nodes.len());
    for id in nodes {
        targets.push(g.index_of(id).ok_or_else(|| Error::UnknownId(id.clone()))? as u32);
    }
    let plan = model.plan(g, &targets, Neighborhood::Full);
    let fwd = model.forward(&plan, &table);
    let depth = model.spec.depth();
    let d = model.output_dim();
    let top = &plan.levels[depth];
    let mut values = Vec::with_capacity(nodes.len() * d);
    for &t in &targets {
        let p = position(top, t) as usize;
        values.extend_from_slice(&fwd.states[depth][p * d..(p + 1) * d]);
    }
    EmbeddingMatrix::dense(model.spec.arch.name(), d, nodes.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{flatten, gradcheck, unflatten};

    fn features(ids: &[String], dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = seed::rng(seed);
        let values = (0..ids.len() * dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        EmbeddingMatrix::dense("x", dim, ids.to_vec(), values).unwrap()
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> (GraphSnapshot, Vec<String>) {
        let ids: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        let e: Vec<(&str, &str)> = edges
            .iter()
            .map(|&(a, b)| (ids[a].as_str(), ids[b].as_str()))
            .collect();
        (
            GraphSnapshot::from_edges(None, ids.clone(), e).unwrap(),
            ids,
        )
    }

    fn spec(arch: Architecture, dims: Vec<usize>, samples: Vec<usize>) -> GnnSpec {
        GnnSpec {
            dims,
            samples,
            ..GnnSpec::new(arch)
        }
    }

    fn fd_error(
        model: &GnnModel,
        g: &GraphSnapshot,
        x: &EmbeddingMatrix,
        batch: &EdgeBatch,
    ) -> f64 {
        let (_, grads) = model.batch_loss_and_grad(g, x, batch).unwrap();
        let theta = flatten(&model.layers);
        let coords: Vec<usize> = (0..theta.len()).collect();
        let mut scratch = model.clone();
        gradcheck::max_relative_error(&theta, &grads.flatten(), &coords, 1e-5, |t| {
            unflatten(&mut scratch.layers, t);
            scratch.batch_loss(g, x, batch).unwrap()
        })
    }

    #[test]
    fn one_layer_three_node_gradients() {
        let (g, ids) = graph(3, &[(0, 1), (1, 2)]);
        let x = features(&ids, 3, 1);
        let batch = EdgeBatch {
            edges: vec![(0, 1)],
            negatives: vec![vec![2]],
            sample_seed: 0,
        };
        for arch in [Architecture::SageMean, Architecture::CombSage] {
            let model = GnnModel::init(spec(arch, vec![2], vec![5]), 3, 4).unwrap();
            let err = fd_error(&model, &g, &x, &batch);
            assert!(err < 1e-4, "{arch}: {err}");
        }
    }

    #[test]
    fn deeper_gradients_all_combine_modes() {
        let (g, ids) = graph(
            8,
            &[
                (0, 1),
                (1, 2),
                (2, 0),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 3),
                (6, 7),
                (7, 0),
                (6, 1),
            ],
        );
        let x = features(&ids, 4, 2);
        let batch = EdgeBatch {
            edges: vec![(0, 1), (3, 4)],
            negatives: vec![vec![5, 6], vec![7, 1]],
            sample_seed: 9,
        };
        for combine in [Combine::Mean, Combine::Sum, Combine::Max] {
            for activation in [Activation::Sigmoid, Activation::Identity] {
                let mut s = spec(Architecture::CombSage, vec![3, 3], vec![3, 2]);
                s.combine = combine;
                s.activation = activation;
                let model = GnnModel::init(s, 4, 7).unwrap();
                let err = fd_error(&model, &g, &x, &batch);
                assert!(err < 1e-4, "{combine}/{activation}: {err}");
            }
        }
    }

    #[test]
    fn independent_neighborhoods_make_architectures_agree() {
        // A bipartite graph: no node's neighbors are adjacent to each other.
        let edges: Vec<(usize, usize)> =
            (0..5).flat_map(|a| (5..10).map(move |b| (a, b))).collect();
        let (g, ids) = graph(10, &edges);
        let x = features(&ids, 4, 3);
        let sage =
            GnnModel::init(spec(Architecture::SageMean, vec![3, 3], vec![3, 3]), 4, 11).unwrap();
        let mut comb = sage.clone();
        comb.spec.arch = Architecture::CombSage;
        let a = gnn_infer(&sage, &g, &x, &ids).unwrap();
        let b = gnn_infer(&comb, &g, &x, &ids).unwrap();
        assert_eq!(a.dense_row(0), b.dense_row(0));
        for i in 0..ids.len() {
            assert_eq!(a.dense_row(i), b.dense_row(i));
        }
        let batch = EdgeBatch {
            edges: vec![(0, 5), (1, 6)],
            negatives: vec![vec![2], vec![3]],
            sample_seed: 1,
        };
        assert_eq!(
            sage.batch_loss(&g, &x, &batch).unwrap(),
            comb.batch_loss(&g, &x, &batch).unwrap()
        );
    }

    #[test]
    fn isolated_node_uses_self_term_only() {
        let (g, ids) = graph(4, &[(0, 1), (1, 2)]);
        let x = features(&ids, 3, 5);
        let model = GnnModel::init(spec(Architecture::CombSage, vec![4], vec![5]), 3, 2).unwrap();
        let out = gnn_infer(&model, &g, &x, &[ids[3].clone()]).unwrap();
        let mut input = x.dense_row(3);
        input.extend([0.0; 3]);
        let (_, a) = model.layers[0].forward(Input::Dense(&input));
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let expected: Vec<f64> = a.iter().map(|v| v / norm).collect();
        assert_eq!(out.dense_row(0), expected);
    }

    #[test]
    fn inference_is_deterministic_and_inductive() {
        let (g, ids) = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let x = features(&ids, 3, 8);
        let cfg = GnnTrainConfig {
            epochs: 2,
            batch_size: 2,
            seed: 3,
            ..Default::default()
        };
        let s = spec(Architecture::CombSage, vec![4, 4], vec![3, 3]);
        let (model, _) = gnn_train(&g, &x, &s, &cfg).unwrap();
        let a = gnn_infer(&model, &g, &x, &ids).unwrap();
        assert_eq!(a, gnn_infer(&model, &g, &x, &ids).unwrap());
        for i in 0..a.len() {
            assert!((a.row(i).norm() - 1.0).abs() < 1e-6);
        }

        // a node added after training, citing two known nodes
        let mut ids2 = ids.clone();
        ids2.push("v99".into());
        let e2 = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];
        let mut edges: Vec<(&str, &str)> = e2
            .iter()
            .map(|&(a, b)| (ids[a].as_str(), ids[b].as_str()))
            .collect();
        edges.push(("v99", "v00"));
        edges.push(("v99", "v03"));
        let g2 = GraphSnapshot::from_edges(None, ids2.clone(), edges).unwrap();
        let x2 = features(&ids2, 3, 8);
        let new = gnn_infer(&model, &g2, &x2, &["v99".to_string()]).unwrap();
        assert_eq!(new.len(), 1);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (g, ids) = graph(
            7,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 0),
                (0, 3),
            ],
        );
        let x = features(&ids, 3, 1);
        let cfg = GnnTrainConfig {
            epochs: 2,
            batch_size: 3,
            seed: 5,
            ..Default::default()
        };
        let s = spec(Architecture::SageMean, vec![4, 4], vec![2, 2]);
        let (a, ra) = gnn_train(&g, &x, &s, &cfg).unwrap();
        let (b, rb) = gnn_train(&g, &x, &s, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_eq!(ra.epoch_losses.len(), 2);
    }

    #[test]
    fn feature_mismatch_and_missing() {
        let (g, ids) = graph(3, &[(0, 1), (1, 2)]);
        let s = spec(Architecture::SageMean, vec![2], vec![2]);
        let model = GnnModel::init(s.clone(), 4, 0).unwrap();
        let x3 = features(&ids, 3, 0);
        assert!(matches!(
            gnn_infer(&model, &g, &x3, &ids),
            Err(Error::DimensionMismatch { .. })
        ));
        let partial = features(&ids[..2], 4, 0);
        assert!(gnn_infer(&model, &g, &partial, &ids).is_err());
        assert!(gnn_train(&g, &partial, &s, &GnnTrainConfig::default()).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let model =
            GnnModel::init(spec(Architecture::CombSage, vec![3, 2], vec![4, 2]), 5, 1).unwrap();
        let text = model.to_checkpoint();
        let back = GnnModel::from_checkpoint(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_checkpoint(), text);
        assert!(GnnModel::from_checkpoint("dense\n").is_err());
    }
}
