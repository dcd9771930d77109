//! Ranking quality, novelty/diversity, and aggregate statistics.
//!
//! Rankings are duplicate-free slices; relevant sets are hash sets of the
//! same item type. Undefined values are `None`, never 0.

use std::collections::HashSet;
use std::hash::Hash;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::matrix::EmbeddingMatrix;
use crate::seed;

fn hits<T: Eq + Hash>(ranking: &[T], relevant: &HashSet<T>, k: usize) -> usize {
    ranking
        .iter()
        .take(k)
        .filter(|x| relevant.contains(x))
        .count()
}

/// `(precision@k, recall@k)`; precision divides by `k` even for shorter
/// rankings, recall is absent for an empty relevant set.
pub fn precision_recall_at_k<T: Eq + Hash>(
    ranking: &[T],
    relevant: &HashSet<T>,
    k: usize,
) -> (f64, Option<f64>) {
    assert!(k >= 1, "k must be at least 1");
    let h = hits(ranking, relevant, k) as f64;
    let recall = (!relevant.is_empty()).then(|| h / relevant.len() as f64);
    (h / k as f64, recall)
}

/// Fraction of (relevant, irrelevant) pairs ordered correctly, over the
/// items of `ranking`. Absent unless both classes are present.
pub fn auc<T: Eq + Hash>(ranking: &[T], relevant: &HashSet<T>) -> Option<f64> {
    let n = ranking.len() as u64;
    let mut r = 0u64;
    // irrelevant items ranked above some relevant item, counted per pair
    let mut misordered = 0u64;
    for (pos, x) in ranking.iter().enumerate() {
        if relevant.contains(x) {
            misordered += pos as u64 - r;
            r += 1;
        }
    }
    if r == 0 || r == n {
        return None;
    }
    let total = r * (n - r);
    Some((total - misordered) as f64 / total as f64)
}

fn discount(i: usize) -> f64 {
    1.0 / ((i + 1) as f64).log2()
}

/// Binary-relevance nDCG over the first `k` positions (ranks from 1).
pub fn ndcg_at_k<T: Eq + Hash>(ranking: &[T], relevant: &HashSet<T>, k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, x)| relevant.contains(x))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let ideal: f64 = (1..=k.min(relevant.len())).map(discount).sum();
    Some(dcg / ideal)
}

/// 1-based rank of the first relevant item.
pub fn first_relevant_rank<T: Eq + Hash>(ranking: &[T], relevant: &HashSet<T>) -> Option<usize> {
    ranking
        .iter()
        .position(|x| relevant.contains(x))
        .map(|p| p + 1)
}

pub fn reciprocal_rank<T: Eq + Hash>(ranking: &[T], relevant: &HashSet<T>) -> Option<f64> {
    first_relevant_rank(ranking, relevant).map(|r| 1.0 / r as f64)
}

fn row_of(reference: &EmbeddingMatrix, id: &str) -> Result<usize> {
    reference.index_of(id).ok_or_else(|| {
        Error::UnknownId(format!(
            "{id} (not in the {} reference space)",
            reference.method()
        ))
    })
}

/// Mean cosine distance from the query to each recommendation.
pub fn novelty(reference: &EmbeddingMatrix, q: &str, recs: &[&str]) -> Result<f64> {
    if recs.is_empty() {
        return Err(Error::Invalid("novelty of an empty list".into()));
    }
    let qi = row_of(reference, q)?;
    let mut total = 0.0;
    for r in recs {
        total += 1.0 - reference.cosine(qi, row_of(reference, r)?);
    }
    Ok(total / recs.len() as f64)
}

/// Mean cosine distance over unordered pairs; absent below two items.
pub fn diversity(reference: &EmbeddingMatrix, recs: &[&str]) -> Result<Option<f64>> {
    let rows: Vec<usize> = recs
        .iter()
        .map(|r| row_of(reference, r))
        .collect::<Result<_>>()?;
    if rows.len() < 2 {
        return Ok(None);
    }
    let mut total = 0.0;
    for (i, &a) in rows.iter().enumerate() {
        for &b in &rows[i + 1..] {
            total += 1.0 - reference.cosine(a, b);
        }
    }
    let pairs = rows.len() * (rows.len() - 1) / 2;
    Ok(Some(total / pairs as f64))
}

/// Novelty and diversity of the relevant items among the top `k`.
pub fn subset_metrics(
    reference: &EmbeddingMatrix,
    q: &str,
    ranking: &[&str],
    relevant: &HashSet<&str>,
    k: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    let subset: Vec<&str> = ranking
        .iter()
        .take(k)
        .filter(|x| relevant.contains(*x))
        .copied()
        .collect();
    if subset.is_empty() {
        return Ok((None, None));
    }
    Ok((
        Some(novelty(reference, q, &subset)?),
        diversity(reference, &subset)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopSummary {
    pub mean: Option<f64>,
    pub reachable: usize,
    pub unreachable: usize,
}

/// Mean shortest-path length from `q` to each reachable recommendation.
pub fn mean_hop_distance(g: &GraphSnapshot, q: &str, recs: &[&str]) -> Result<HopSummary> {
    let qi = g
        .index_of(q)
        .ok_or_else(|| Error::UnknownId(q.to_string()))?;
    let dist = g.hop_distances(qi);
    hop_summary(g, &dist, recs)
}

/// As [`mean_hop_distance`] with precomputed distances from the query.
pub fn hop_summary(g: &GraphSnapshot, dist: &[Option<u32>], recs: &[&str]) -> Result<HopSummary> {
    let mut sum = 0u64;
    let mut reachable = 0;
    let mut unreachable = 0;
    for r in recs {
        let ri = g
            .index_of(r)
            .ok_or_else(|| Error::UnknownId(r.to_string()))?;
        match dist[ri] {
            Some(d) => {
                sum += d as u64;
                reachable += 1;
            }
            None => unreachable += 1,
        }
    }
    Ok(HopSummary {
        mean: (reachable > 0).then(|| sum as f64 / reachable as f64),
        reachable,
        unreachable,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `(mean, std of B resampled means)`.
pub fn bootstrap(values: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Invalid("bootstrap of an empty sample".into()));
    }
    if resamples < 2 {
        return Err(Error::Config("bootstrap needs at least 2 resamples".into()));
    }
    let mut rng = seed::rng(seed);
    let n = values.len();
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    if means.iter().all(|&x| x == means[0]) {
        return Ok((mean(values), 0.0));
    }
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (resamples - 1) as f64;
    Ok((mean(values), var.sqrt()))
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Standardized mean difference with pooled sample SD. `Ok(None)` when the
/// pooled SD is zero.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid(
            "Cohen's d needs at least two values per sample".into(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b))
        / (na + nb - 2.0))
        .sqrt();
    if pooled == 0.0 {
        return Ok(None);
    }
    Ok(Some((mean(a) - mean(b)) / pooled))
}
