//! DeepWalk: uniform random walks on the undirected citation graph fed to a
//! skip-gram model trained with negative sampling.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::matrix::EmbeddingMatrix;
use crate::nn::sigmoid;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct DeepWalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub dim: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Passes over the walks of new nodes when folding them into a trained model.
    pub fold_in_epochs: usize,
    pub seed: u64,
}

impl Default for DeepWalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            dim: 128,
            negative_samples: 5,
            epochs: 1,
            learning_rate: 0.025,
            fold_in_epochs: 5,
            seed: 0,
        }
    }
}

impl DeepWalkConfig {
    fn validate(&self) -> Result<()> {
        let ints = [
            ("walks_per_node", self.walks_per_node),
            ("walk_length", self.walk_length),
            ("window", self.window),
            ("dim", self.dim),
            ("negative_samples", self.negative_samples),
            ("epochs", self.epochs),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(Error::Config(format!("deepwalk {name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(
                "deepwalk learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One walk of `length` nodes starting at `start`. An isolated node yields
/// the single-node walk `[start]`.
pub fn random_walk<R: Rng>(
    g: &GraphSnapshot,
    start: usize,
    length: usize,
    rng: &mut R,
) -> Vec<u32> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start as u32);
    let mut cur = start;
    while walk.len() < length {
        let nbrs = g.adjacent(cur);
        if nbrs.is_empty() {
            break;
        }
        cur = nbrs[rng.gen_range(0..nbrs.len())] as usize;
        walk.push(cur as u32);
    }
    walk
}

/// `walks_per_node` rounds; each round visits `starts` in a shuffled order.
/// Every walk has its own RNG stream, so the result is independent of the
/// thread count.
pub fn random_walks(
    g: &GraphSnapshot,
    starts: &[u32],
    walks_per_node: usize,
    walk_length: usize,
    seed: u64,
) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(starts.len() * walks_per_node);
    for round in 0..walks_per_node {
        let round_seed = seed::derive_index(seed, round as u64);
        let mut order = starts.to_vec();
        order.shuffle(&mut seed::rng(seed::derive(round_seed, "order")));
        let walks: Vec<Vec<u32>> = order
            .par_iter()
            .map(|&v| {
                let mut rng = seed::rng(seed::derive_index(round_seed, u64::from(v)));
                random_walk(g, v as usize, walk_length, &mut rng)
            })
            .collect();
        out.extend(walks);
    }
    out
}

/// Trained skip-gram parameters: input ("syn0") and output ("syn1neg")
/// vectors per graph node.
#[derive(Debug, Clone)]
pub struct DeepWalkModel {
    ids: Vec<String>,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    noise: Option<WeightedIndex<f64>>,
    /// Nodes without neighbors; they keep their initial vectors.
    pub isolated: usize,
}

fn noise_distribution(g: &GraphSnapshot) -> Option<WeightedIndex<f64>> {
    let weights: Vec<f64> = (0..g.node_count())
        .map(|i| (g.degree(i) as f64).powf(0.75))
        .collect();
    WeightedIndex::new(weights).ok()
}

fn init_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| (rng.gen::<f64>() - 0.5) / dim as f64)
        .collect()
}

/// One skip-gram update of `center`'s input vector toward `context` and
/// away from sampled noise nodes. Output vectors move too unless frozen.
#[allow(clippy::too_many_arguments)]
fn sgns_step<R: Rng>(
    input: &mut [f64],
    output: &mut [f64],
    dim: usize,
    center: usize,
    context: usize,
    noise: &WeightedIndex<f64>,
    negatives: usize,
    lr: f64,
    freeze_output: bool,
    rng: &mut R,
    grad: &mut [f64],
) {
    grad.iter_mut().for_each(|x| *x = 0.0);
    let c = center * dim;
    for k in 0..=negatives {
        let (target, label) = if k == 0 {
            (context, 1.0)
        } else {
            let t = noise.sample(rng);
            if t == context {
                continue;
            }
            (t, 0.0)
        };
        let t = target * dim;
        let dot: f64 = (0..dim).map(|j| input[c + j] * output[t + j]).sum();
        let g = (label - sigmoid(dot)) * lr;
        for j in 0..dim {
            grad[j] += g * output[t + j];
        }
        if !freeze_output {
            for j in 0..dim {
                output[t + j] += g * input[c + j];
            }
        }
    }
    for j in 0..dim {
        input[c + j] += grad[j];
    }
}

impl DeepWalkModel {
    pub fn train(g: &GraphSnapshot, cfg: &DeepWalkConfig) -> Result<Self> {
        cfg.validate()?;
        let n = g.node_count();
        if n == 0 {
            return Err(Error::Invalid("deepwalk needs a nonempty graph".into()));
        }
        let dim = cfg.dim;
        let mut init_rng = seed::rng(seed::derive(cfg.seed, "deepwalk/init"));
        let mut input = Vec::with_capacity(n * dim);
        for _ in 0..n {
            input.extend(init_vector(dim, &mut init_rng));
        }
        let mut output = vec![0.0; n * dim];
        let isolated = (0..n).filter(|&i| g.degree(i) == 0).count();
        let noise = noise_distribution(g);

        if let Some(noise) = &noise {
            let starts: Vec<u32> = (0..n as u32).collect();
            let walks = random_walks(
                g,
                &starts,
                cfg.walks_per_node,
                cfg.walk_length,
                seed::derive(cfg.seed, "deepwalk/walks"),
            );
            let total: usize = walks.iter().map(Vec::len).sum::<usize>() * cfg.epochs;
            let mut done = 0usize;
            let mut rng = seed::rng(seed::derive(cfg.seed, "deepwalk/sgns"));
            let mut grad = vec![0.0; dim];
            for _ in 0..cfg.epochs {
                for walk in &walks {
                    for (i, &center) in walk.iter().enumerate() {
                        let lr = cfg.learning_rate * (1.0 - done as f64 / total as f64).max(1e-4);
                        done += 1;
                        let lo = i.saturating_sub(cfg.window);
                        let hi = (i + cfg.window).min(walk.len() - 1);
                        for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                            if j == i {
                                continue;
                            }
                            sgns_step(
                                &mut input,
                                &mut output,
                                dim,
                                center as usize,
                                ctx as usize,
                                noise,
                                cfg.negative_samples,
                                lr,
                                false,
                                &mut rng,
                                &mut grad,
                            );
                        }
                    }
                }
            }
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("deepwalk vectors diverged".into()));
        }
        if isolated > 0 {
            log::warn!("deepwalk: {isolated} isolated nodes keep their initial vectors");
        }
        Ok(Self {
            ids: g.ids().to_vec(),
            dim,
            input,
            output,
            noise,
            isolated,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// L2-normalized input vectors.
    pub fn embeddings(&self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::dense(
            "deepwalk",
            self.dim,
            self.ids.clone(),
            normalized(&self.input, self.dim),
        )
    }

    /// Vectors for nodes of a later snapshot that the model has not seen,
    /// trained against the frozen vectors of known nodes. Known nodes keep
    /// their vectors; rows are returned for `new_ids` only.
    pub fn fold_in(
        &self,
        g: &GraphSnapshot,
        new_ids: &[String],
        cfg: &DeepWalkConfig,
    ) -> Result<EmbeddingMatrix> {
        cfg.validate()?;
        let dim = self.dim;
        let known: std::collections::HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut starts = Vec::with_capacity(new_ids.len());
        for id in new_ids {
            if known.contains_key(id.as_str()) {
                return Err(Error::Invalid(format!("{id:?} is already embedded")));
            }
            let gi = g.index_of(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            starts.push(gi as u32);
        }
        // graph index -> slot: known nodes share the model's storage, new
        // nodes get slots after them.
        let mut slot: Vec<Option<usize>> = vec![None; g.node_count()];
        for (gi, id) in g.ids().iter().enumerate() {
            slot[gi] = known.get(id.as_str()).copied();
        }
        let mut input = self.input.clone();
        let mut output = self.output.clone();
        let mut rng = seed::rng(seed::derive(cfg.seed, "deepwalk/fold-in/init"));
        for (k, &gi) in starts.iter().enumerate() {
            slot[gi as usize] = Some(self.ids.len() + k);
            input.extend(init_vector(dim, &mut rng));
            output.extend(std::iter::repeat_n(0.0, dim));
        }
        let fresh = |s: usize| s >= self.ids.len();

        if let Some(noise) = &self.noise {
            let walks = random_walks(
                g,
                &starts,
                cfg.walks_per_node,
                cfg.walk_length,
                seed::derive(cfg.seed, "deepwalk/fold-in/walks"),
            );
            let mut rng = seed::rng(seed::derive(cfg.seed, "deepwalk/fold-in/sgns"));
            let mut grad = vec![0.0; dim];
            let passes = cfg.fold_in_epochs.max(1);
            for pass in 0..passes {
                let lr = cfg.learning_rate * (1.0 - pass as f64 / passes as f64).max(1e-4);
                for walk in &walks {
                    let slots: Vec<usize> =
                        walk.iter().map(|&v| slot[v as usize].unwrap()).collect();
                    for (i, &center) in slots.iter().enumerate() {
                        if !fresh(center) {
                            continue;
                        }
                        let lo = i.saturating_sub(cfg.window);
                        let hi = (i + cfg.window).min(slots.len() - 1);
                        for (j, &ctx) in slots.iter().enumerate().take(hi + 1).skip(lo) {
                            if j == i || fresh(ctx) {
                                continue;
                            }
                            sgns_step(
                                &mut input,
                                &mut output,
                                dim,
                                center,
                                ctx,
                                noise,
                                cfg.negative_samples,
                                lr,
                                true,
                                &mut rng,
                                &mut grad,
                            );
                        }
                    }
                }
            }
        }
        let start = self.ids.len() * dim;
        let fresh_rows = &input[start..];
        EmbeddingMatrix::dense(
            "deepwalk",
            dim,
            new_ids.to_vec(),
            normalized(fresh_rows, dim),
        )
    }
}

fn normalized(values: &[f64], dim: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for row in out.chunks_mut(dim) {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    out
}

/// Trains on `g` and returns the normalized vectors of every node.
pub fn deepwalk_embed(g: &GraphSnapshot, cfg: &DeepWalkConfig) -> Result<EmbeddingMatrix> {
    DeepWalkModel::train(g, cfg)?.embeddings()
}
