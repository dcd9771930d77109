//! Neighbor aggregation functions.
//!
//! `sage_aggregate` averages all neighbor vectors. `combsage_aggregate` first
//! averages within each neighborhood component and then combines the
//! component means, so a small component carries the same weight as a large
//! one under the default `Combine::Mean`.
//!
//! Both public functions sum their inputs in a canonical order (sorted by
//! value), which makes them exactly invariant to input permutations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How per-component means are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combine {
    #[default]
    Mean,
    Sum,
    Max,
}

impl Combine {
    pub fn name(self) -> &'static str {
        match self {
            Combine::Mean => "mean",
            Combine::Sum => "sum",
            Combine::Max => "max",
        }
    }
}

impl fmt::Display for Combine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Combine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Combine::Mean),
            "sum" => Ok(Combine::Sum),
            "max" => Ok(Combine::Max),
            _ => Err(Error::Config(format!("unknown combine mode {s:?}"))),
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn check_dims(vectors: &[&[f64]], dim: usize) -> Result<()> {
    match vectors.iter().find(|v| v.len() != dim) {
        Some(v) => Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
            context: "aggregated vector".into(),
        }),
        None => Ok(()),
    }
}

/// Element-wise mean, summing in the given order.
pub(crate) fn mean_in_order<'a>(
    vectors: impl IntoIterator<Item = &'a [f64]>,
    dim: usize,
) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut n = 0usize;
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
        n += 1;
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

fn canonical_mean(vectors: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut sorted = vectors.to_vec();
    sorted.sort_by(|a, b| lexicographic(a, b));
    mean_in_order(sorted, dim)
}

/// Merges component means according to `combine`.
pub(crate) fn combine_in_order(means: &[Vec<f64>], dim: usize, combine: Combine) -> Vec<f64> {
    match combine {
        Combine::Mean => mean_in_order(means.iter().map(Vec::as_slice), dim),
        Combine::Sum => {
            let mut acc = vec![0.0; dim];
            for m in means {
                for (a, x) in acc.iter_mut().zip(m) {
                    *a += x;
                }
            }
            acc
        }
        Combine::Max => {
            if means.is_empty() {
                return vec![0.0; dim];
            }
            let mut acc = means[0].clone();
            for m in &means[1..] {
                for (a, &x) in acc.iter_mut().zip(m) {
                    if x > *a {
                        *a = x;
                    }
                }
            }
            acc
        }
    }
}

/// Element-wise mean of neighbor vectors. An isolated node has nothing to
/// aggregate: callers substitute a zero vector.
pub fn sage_aggregate(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Invalid("nothing to aggregate".into()))?;
    let dim = first.len();
    check_dims(vectors, dim)?;
    Ok(canonical_mean(vectors, dim))
}

/// Per-component means merged by `combine`. No components gives the zero
/// vector of length `dim`.
pub fn combsage_aggregate(
    components: &[Vec<&[f64]>],
    dim: usize,
    combine: Combine,
) -> Result<Vec<f64>> {
    let mut means = Vec::with_capacity(components.len());
    for comp in components {
        if comp.is_empty() {
            return Err(Error::Invalid("empty neighborhood component".into()));
        }
        check_dims(comp, dim)?;
        means.push(canonical_mean(comp, dim));
    }
    means.sort_by(|a, b| lexicographic(a, b));
    Ok(combine_in_order(&means, dim, combine))
}
