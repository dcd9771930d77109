//! Pairwise MLP scorer over (query, candidate) embeddings and top-k ranking.
//!
//! The scorer is `σ(W2 · σ(W1 · [h_q, h_i] + b1) + b2)`. Ranking splits `W1`
//! into its query and candidate halves so that the candidate half is applied
//! once per candidate instead of once per (query, candidate) pair.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::cocite::CoCitations;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::{EmbeddingMatrix, Row};
use crate::nn::checkpoint::{field, header_fields, parse_field, read_layers, write_layers};
use crate::nn::{sigmoid, Activation, DenseParams, Example, Features, Layer, Loss, OptimizerState};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub q: String,
    pub i: String,
    pub label: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerConfig {
    pub hidden: usize,
    pub hidden_activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Negatives per positive pair.
    pub negatives: usize,
    /// Keep at most this many co-citations as positives (uniform subsample).
    pub max_positives: Option<usize>,
    pub seed: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            hidden_activation: Activation::Sigmoid,
            epochs: 5,
            batch_size: 256,
            learning_rate: 1e-3,
            negatives: 5,
            max_positives: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    /// Embedding method the scorer was trained against.
    pub method: String,
    pub embed_dim: usize,
    pub params: DenseParams,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScorerReport {
    pub epoch_losses: Vec<f64>,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    pub query: String,
    /// Descending by score; ties by ascending id.
    pub items: Vec<(String, f64)>,
}

impl RecommendationList {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }

    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.items[..k.min(self.items.len())]
    }
}

/// Positive pairs (both orientations) for every co-citation first seen on or
/// before `cutoff_year` whose members are both in `pool`, plus `m` uniform
/// negatives per positive drawn from `pool` minus the query and its
/// positive partners.
pub fn build_training_pairs(
    cocites: &CoCitations,
    corpus: &Corpus,
    cutoff_year: i32,
    pool: &BTreeSet<String>,
    m: usize,
    max_positives: Option<usize>,
    seed: u64,
) -> Result<Vec<LabeledPair>> {
    if m == 0 {
        return Err(Error::Config(
            "need at least one negative per positive".into(),
        ));
    }
    if pool.is_empty() {
        return Err(Error::Invalid("empty candidate pool".into()));
    }
    let pool_idx: Vec<u32> = pool
        .iter()
        .map(|id| {
            corpus
                .index_of(id)
                .map(|i| i as u32)
                .ok_or_else(|| Error::UnknownId(id.clone()))
        })
        .collect::<Result<_>>()?;
    let in_pool: HashSet<u32> = pool_idx.iter().copied().collect();

    let mut positives: Vec<(u32, u32)> = cocites
        .pairs()
        .into_iter()
        .filter(|&((a, b), y)| y <= cutoff_year && in_pool.contains(&a) && in_pool.contains(&b))
        .map(|(k, _)| k)
        .collect();
    if positives.is_empty() {
        return Err(Error::Invalid(format!(
            "no co-citations on or before {cutoff_year} inside the candidate pool"
        )));
    }
    if let Some(cap) = max_positives {
        if positives.len() > cap {
            let mut rng = seed::rng(seed::derive(seed, "pairs/cap"));
            positives.shuffle(&mut rng);
            positives.truncate(cap);
            positives.sort_unstable();
        }
    }

    let known = |q: u32| -> HashSet<u32> {
        cocites
            .partners(q as usize)
            .iter()
            .filter(|&&(p, y)| y <= cutoff_year && in_pool.contains(&p))
            .map(|&(p, _)| p)
            .collect()
    };
    let mut rng = seed::rng(seed::derive(seed, "pairs/negatives"));
    let id = |i: u32| corpus.paper(i as usize).id.clone();
    let mut out = Vec::with_capacity(positives.len() * 2 * (m + 1));
    for &(a, b) in &positives {
        for (q, i) in [(a, b), (b, a)] {
            out.push(LabeledPair {
                q: id(q),
                i: id(i),
                label: true,
                weight: 1.0,
            });
            let exclude = known(q);
            if exclude.len() + 1 >= pool_idx.len() {
                return Err(Error::Invalid(format!(
                    "no negatives available for {}: every pool member is co-cited with it",
                    id(q)
                )));
            }
            for _ in 0..m {
                let n = loop {
                    let c = pool_idx[rng.gen_range(0..pool_idx.len())];
                    if c != q && !exclude.contains(&c) {
                        break c;
                    }
                };
                out.push(LabeledPair {
                    q: id(q),
                    i: id(n),
                    label: false,
                    weight: 1.0,
                });
            }
        }
    }
    Ok(out)
}

fn concat_features(q: Row<'_>, i: Row<'_>, d: usize) -> Features {
    match (q, i) {
        (Row::Dense(a), Row::Dense(b)) => Features::Dense(a.iter().chain(b).copied().collect()),
        (a, b) => {
            let mut v = sparse_entries(a);
            v.extend(
                sparse_entries(b)
                    .into_iter()
                    .map(|(j, x)| (j + d as u32, x)),
            );
            Features::Sparse(v)
        }
    }
}

fn sparse_entries(r: Row<'_>) -> Vec<(u32, f64)> {
    match r {
        Row::Dense(v) => v.iter().enumerate().map(|(j, &x)| (j as u32, x)).collect(),
        Row::Sparse(v) => v.to_vec(),
    }
}

/// `W[:, offset..offset + d] · x` for one layer.
fn half_product(l: &Layer, x: Row<'_>, offset: usize) -> Vec<f64> {
    (0..l.out_dim)
        .map(|o| {
            let w = &l.weights[o * l.in_dim + offset..];
            match x {
                Row::Dense(v) => v.iter().zip(w).map(|(a, b)| a * b).sum(),
                Row::Sparse(v) => v.iter().map(|&(j, a)| a * w[j as usize]).sum(),
            }
        })
        .collect()
}

/// Candidate halves of the first layer, precomputed for ranking.
pub struct CandidateIndex {
    ids: Vec<String>,
    partial: Vec<Vec<f64>>,
}

impl CandidateIndex {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

impl ScorerModel {
    pub fn new(method: impl Into<String>, embed_dim: usize, cfg: &ScorerConfig) -> Result<Self> {
        if embed_dim == 0 || cfg.hidden == 0 {
            return Err(Error::Config("scorer dimensions must be positive".into()));
        }
        let mut rng = seed::rng(seed::derive(cfg.seed, "scorer/init"));
        let params = DenseParams::new(
            &[2 * embed_dim, cfg.hidden, 1],
            &[cfg.hidden_activation, Activation::Sigmoid],
            &mut rng,
        )?;
        Ok(Self {
            method: method.into(),
            embed_dim,
            params,
        })
    }

    fn check(&self, r: &Row<'_>, what: &str) -> Result<()> {
        let found = match r {
            Row::Dense(v) => v.len(),
            Row::Sparse(v) => v.iter().map(|&(j, _)| j as usize + 1).max().unwrap_or(0),
        };
        let ok = match r {
            Row::Dense(_) => found == self.embed_dim,
            Row::Sparse(_) => found <= self.embed_dim,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.embed_dim,
                found,
                context: format!("{what} embedding for the scorer"),
            })
        }
    }

    fn query_part(&self, hq: Row<'_>) -> Vec<f64> {
        half_product(&self.params.layers[0], hq, 0)
    }

    fn candidate_part(&self, hi: Row<'_>) -> Vec<f64> {
        half_product(&self.params.layers[0], hi, self.embed_dim)
    }

    fn finish(&self, zq: &[f64], zi: &[f64]) -> f64 {
        let (l1, l2) = (&self.params.layers[0], &self.params.layers[1]);
        let mut z2 = l2.bias[0];
        for o in 0..l1.out_dim {
            let a = l1.activation.apply(zq[o] + zi[o] + l1.bias[o]);
            z2 += l2.weights[o] * a;
        }
        sigmoid(z2)
    }

    pub fn score_pair(&self, hq: Row<'_>, hi: Row<'_>) -> Result<f64> {
        self.check(&hq, "query")?;
        self.check(&hi, "candidate")?;
        Ok(self.finish(&self.query_part(hq), &self.candidate_part(hi)))
    }

    pub fn index_candidates(
        &self,
        emb: &EmbeddingMatrix,
        ids: &[String],
    ) -> Result<CandidateIndex> {
        let missing = emb.missing(ids.iter().map(String::as_str));
        if !missing.is_empty() {
            return Err(missing_embeddings(&missing, "candidates"));
        }
        let rows: Vec<usize> = ids.iter().map(|id| emb.index_of(id).unwrap()).collect();
        if let Some(&r) = rows.first() {
            self.check(&emb.row(r), "candidate")?;
        }
        let partial = rows
            .par_iter()
            .map(|&r| self.candidate_part(emb.row(r)))
            .collect();
        Ok(CandidateIndex {
            ids: ids.to_vec(),
            partial,
        })
    }

    /// Scores every indexed candidate except `exclude`; descending score,
    /// ties by ascending id.
    pub fn rank(
        &self,
        query: &str,
        hq: Row<'_>,
        index: &CandidateIndex,
    ) -> Result<RecommendationList> {
        self.check(&hq, "query")?;
        let zq = self.query_part(hq);
        let mut items: Vec<(String, f64)> = index
            .ids
            .par_iter()
            .zip(index.partial.par_iter())
            .filter(|(id, _)| id.as_str() != query)
            .map(|(id, zi)| (id.clone(), self.finish(&zq, zi)))
            .collect();
        items.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        Ok(RecommendationList {
            query: query.to_string(),
            items,
        })
    }

    pub fn to_checkpoint(&self) -> String {
        let mut out = format!(
            "scorer method={} embed_dim={}\n",
            self.method, self.embed_dim
        );
        write_layers(&mut out, &self.params.layers);
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines
            .next()
            .filter(|l| l.starts_with("scorer "))
            .ok_or_else(|| Error::Invalid("not a scorer checkpoint".into()))?;
        let f = header_fields(head);
        let method = field(&f, "method")?.to_string();
        let embed_dim: usize = parse_field(&f, "embed_dim")?;
        let params = DenseParams::from_layers(read_layers(&mut lines)?)?;
        if params.layers.len() != 2
            || params.input_dim() != 2 * embed_dim
            || params.output_dim() != 1
        {
            return Err(Error::Invalid(
                "scorer checkpoint must be a 2·d → h → 1 network".into(),
            ));
        }
        Ok(Self {
            method,
            embed_dim,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }
}

fn missing_embeddings(missing: &[String], what: &str) -> Error {
    let shown: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
    Error::Invalid(format!(
        "{} {what} lack embeddings: {}{}",
        missing.len(),
        shown.join(", "),
        if missing.len() > 5 { ", ..." } else { "" }
    ))
}

/// Trains a fresh scorer with Adam on mean binary cross-entropy.
pub fn train_scorer(
    emb: &EmbeddingMatrix,
    pairs: &[LabeledPair],
    cfg: &ScorerConfig,
) -> Result<(ScorerModel, ScorerReport)> {
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config(
            "scorer batch_size and learning_rate must be positive".into(),
        ));
    }
    let mut model = ScorerModel::new(emb.method(), emb.dim(), cfg)?;
    let mut missing: Vec<String> = pairs
        .iter()
        .flat_map(|p| [&p.q, &p.i])
        .filter(|id| !emb.contains(id))
        .cloned()
        .collect();
    missing.sort_unstable();
    missing.dedup();
    if !missing.is_empty() {
        return Err(missing_embeddings(&missing, "training papers"));
    }
    let rows: Vec<(usize, usize, f64, f64)> = pairs
        .iter()
        .map(|p| {
            (
                emb.index_of(&p.q).unwrap(),
                emb.index_of(&p.i).unwrap(),
                if p.label { 1.0 } else { 0.0 },
                p.weight,
            )
        })
        .collect();

    let mut opt = OptimizerState::adam(cfg.learning_rate);
    let mut report = ScorerReport::default();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let d = emb.dim();
    for epoch in 0..cfg.epochs {
        let mut rng = seed::rng(seed::derive_index(
            seed::derive(cfg.seed, "scorer/epoch"),
            epoch as u64,
        ));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut weight = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Example> = chunk
                .iter()
                .map(|&r| {
                    let (q, i, y, w) = rows[r];
                    Example {
                        input: concat_features(emb.row(q), emb.row(i), d),
                        target: y,
                        weight: w,
                    }
                })
                .collect();
            let (grads, loss) = model.params.grad(&batch, Loss::BinaryCrossEntropy)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "scorer loss at epoch {epoch}, batch {b}"
                )));
            }
            opt.apply(&mut model.params.layers, &grads)?;
            let w: f64 = batch.iter().map(|e| e.weight).sum();
            total += loss * w;
            weight += w;
        }
        let mean = total / weight.max(f64::MIN_POSITIVE);
        log::debug!("scorer[{}] epoch {epoch}: loss {mean:.5}", emb.method());
        report.epoch_losses.push(mean);
    }
    report.final_loss = report.epoch_losses.last().copied();
    Ok((model, report))
}

/// Top-`k` candidates for `q`, all embeddings taken from `emb`.
pub fn recommend_topk(
    model: &ScorerModel,
    emb: &EmbeddingMatrix,
    q: &str,
    candidates: &[String],
    k: usize,
) -> Result<RecommendationList> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Err(Error::Invalid("empty candidate set".into()));
    }
    let hq = emb
        .row_by_id(q)
        .ok_or_else(|| missing_embeddings(&[q.to_string()], "queries"))?;
    let index = model.index_candidates(emb, candidates)?;
    let mut list = model.rank(q, hq, &index)?;
    list.items.truncate(k);
    Ok(list)
}

/// `<query>\t<rank>\t<candidate>\t<score>` lines, ranks from 1.
pub fn format_recommendations(lists: &[RecommendationList], k: usize) -> String {
    let mut out = String::new();
    for list in lists {
        for (r, (id, s)) in list.top(k).iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", list.query, r + 1, id, s).unwrap();
        }
    }
    out
}
