//! Central-difference gradient verification.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::nn::{flatten, unflatten, DenseParams, Example, Loss};
use crate::seed;

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// A 1% sample of `n` coordinates, at least 50 (all of them when `n <= 50`).
pub fn sample_coordinates(n: usize, seed: u64) -> Vec<usize> {
    let want = (n / 100).max(50);
    if want >= n {
        return (0..n).collect();
    }
    let mut rng = seed::rng(seed);
    let mut picked = index::sample(&mut rng, n, want).into_vec();
    picked.sort_unstable();
    picked
}

/// Largest relative error between `analytic` and the central difference of
/// `loss` at `theta`, over `coords`.
pub fn max_relative_error(
    theta: &[f64],
    analytic: &[f64],
    coords: &[usize],
    eps: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut probe = theta.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        probe[i] = theta[i] + eps;
        let up = loss(&probe);
        probe[i] = theta[i] - eps;
        let down = loss(&probe);
        probe[i] = theta[i];
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

/// Checks [`DenseParams::grad`] against central differences on a sampled
/// subset of coordinates.
pub fn finite_difference_check(
    params: &DenseParams,
    batch: &[Example],
    eps: f64,
    seed: u64,
) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let (grads, _) = params.grad(batch, Loss::BinaryCrossEntropy)?;
    let analytic = grads.flatten();
    let theta = flatten(&params.layers);
    let coords = sample_coordinates(theta.len(), seed);
    let mut scratch = params.clone();
    Ok(max_relative_error(&theta, &analytic, &coords, eps, |t| {
        unflatten(&mut scratch.layers, t);
        scratch
            .loss(batch, Loss::BinaryCrossEntropy)
            .expect("batch already validated")
    }))
}
