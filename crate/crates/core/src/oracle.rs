//! Brute-force reference machinery: grid minimisation, central differences
//! and seeded Monte Carlo with replicate standard errors.

use serde::{Deserialize, Serialize};

use crate::distcore::{empirical_distribution, LossVector};
use crate::error::{Error, Result};
use crate::par;
use crate::risks::{risk_eval, RiskSpec};
use crate::rng::StreamRng;

/// Replicates behind every Monte Carlo standard error.
pub const MC_REPLICATES: usize = 20;

/// Smallest sample size accepted by [`mc_estimate`].
pub const MC_MIN_SAMPLES: usize = 100;

/// Anything that can fill a loss sample from a random stream.
pub trait LossSampler: Sync {
    fn draw(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<f64>>;
}

/// Adapter turning a closure into a [`LossSampler`].
pub struct FnSampler<F>(pub F);

impl<F> LossSampler for FnSampler<F>
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    fn draw(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        Ok((0..n).map(|_| (self.0)(rng)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Exhaustive minimisation on `n_points` evenly spaced points of `[lo, hi]`.
/// Ties go to the smallest argument.
pub fn grid_min_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n_points: usize) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || n_points < 2 {
        return Err(Error::BadBracket { lo, hi });
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..n_points {
        let x = if i == n_points - 1 { hi } else { lo + i as f64 * step };
        let v = f(x);
        if v < best.1 || best.1.is_nan() {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadSpec(format!("finite-difference step {h} must be > 0")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(Error::NonFinite);
        }
        grad.push(g);
    }
    Ok(grad)
}

fn draw_sample(sampler: &dyn LossSampler, n: usize, seed: u64, stream: u64) -> Result<LossVector> {
    let mut rng = StreamRng::new(seed, stream);
    let xs = sampler.draw(n, &mut rng)?;
    if xs.len() != n {
        return Err(Error::BadSampler(format!("asked for {n} draws, got {}", xs.len())));
    }
    LossVector::new(xs).map_err(|e| Error::BadSampler(e.to_string()))
}

/// Monte Carlo estimate of an arbitrary sample statistic.
///
/// The estimate comes from stream 0 of `seed`; the standard error is the
/// spread (n - 1 divisor) of the statistic over streams `1..=20`, which run in
/// parallel.
pub fn mc_estimate_with(
    sampler: &dyn LossSampler,
    stat: impl Fn(&LossVector) -> Result<f64> + Sync,
    n: usize,
    seed: u64,
) -> Result<MCResult> {
    if n < MC_MIN_SAMPLES {
        return Err(Error::BadSpec(format!("mc_estimate needs n >= {MC_MIN_SAMPLES}, got {n}")));
    }
    let runs: Vec<Result<f64>> = par::map_range(MC_REPLICATES + 1, |r| stat(&draw_sample(sampler, n, seed, r as u64)?));
    let values: Vec<f64> = runs.into_iter().collect::<Result<_>>()?;
    let reps = &values[1..];
    let mean = reps.iter().sum::<f64>() / reps.len() as f64;
    let var = reps.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps.len() - 1) as f64;
    Ok(MCResult { estimate: values[0], stderr: var.sqrt(), n_samples: n, seed })
}

/// Monte Carlo estimate of `spec` on the empirical law of `n` draws.
pub fn mc_estimate(sampler: &dyn LossSampler, spec: &RiskSpec, n: usize, seed: u64) -> Result<MCResult> {
    spec.validate()?;
    mc_estimate_with(sampler, |v| Ok(risk_eval(spec, &empirical_distribution(v))?.value), n, seed)
}
