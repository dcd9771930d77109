//! Dense content vectors from raw term counts.
//!
//! Each term gets a fixed pseudo-random Gaussian direction derived from the
//! seed and the term itself; a document is the count-weighted sum of its
//! term directions, L2-normalized. No corpus statistics are involved, so a
//! paper's vector never depends on which other papers exist.

use std::collections::HashMap;

use rand::Rng;

use crate::corpus::Corpus;
use crate::embed::tfidf::tokenize;
use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;
use crate::seed;

/// Box-Muller draw.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Token standing in for documents without any terms.
const EMPTY_DOC: &str = "\u{0}empty";

pub struct ContentProjector {
    dim: usize,
    seed: u64,
    cache: HashMap<String, Vec<f64>>,
}

impl ContentProjector {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("content dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            seed: seed::derive(seed, "content"),
            cache: HashMap::new(),
        })
    }

    fn direction(&mut self, term: &str) -> &[f64] {
        let (dim, s) = (self.dim, self.seed);
        self.cache.entry(term.to_string()).or_insert_with(|| {
            let mut rng = seed::rng(seed::derive(s, term));
            (0..dim).map(|_| standard_normal(&mut rng)).collect()
        })
    }

    pub fn project(&mut self, text: &str) -> Vec<f64> {
        let mut terms = tokenize(text);
        if terms.is_empty() {
            terms.push(EMPTY_DOC.to_string());
        }
        terms.sort_unstable();
        let mut acc = vec![0.0; self.dim];
        for t in &terms {
            for (a, x) in acc.iter_mut().zip(self.direction(t)) {
                *a += x;
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        acc.iter_mut().for_each(|x| *x /= norm);
        acc
    }
}

/// Content vectors for `ids`, method tag `content`.
pub fn content_vectors(
    corpus: &Corpus,
    ids: &[String],
    dim: usize,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    let mut proj = ContentProjector::new(dim, seed)?;
    let mut values = Vec::with_capacity(ids.len() * dim);
    for id in ids {
        let p = corpus.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        values.extend(proj.project(&p.text()));
    }
    EmbeddingMatrix::dense("content", dim, ids.to_vec(), values)
}
