//! Seeded synthetic data: loss/payout laws, regression datasets, grouped
//! losses and the St. Petersburg game.
//!
//! All draws are inverse-CDF transforms of the [`StreamRng`] uniform stream,
//! so output depends only on `(spec, n, seed)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distcore::{canonicalize, DiscreteDistribution, LossVector};
use crate::error::{Error, Result};
use crate::learners::{Dataset, Row};
use crate::oracle::LossSampler;
use crate::par;
use crate::rng::StreamRng;

/// Largest St. Petersburg exponent; payouts are capped at `2^60`.
pub const STPETERSBURG_MAX_K: i32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Normal {
        mu: f64,
        sigma: f64,
    },
    Pareto {
        alpha: f64,
        xm: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    /// `v1` with probability `p`, else `v0`.
    BernoulliScaled {
        p: f64,
        v0: f64,
        v1: f64,
    },
    /// Payout `2^K` with `P{K = k} = 2^-k`, `k >= 1`.
    Stpetersburg,
    /// `(value, prob)` pairs.
    Finite {
        atoms: Vec<(f64, f64)>,
    },
}

/// A validated [`DistSpec`] ready to draw from.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: Prepared,
}

#[derive(Debug, Clone)]
enum Prepared {
    Normal { mu: f64, sigma: f64 },
    Pareto { alpha: f64, xm: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Bernoulli { p: f64, v0: f64, v1: f64 },
    Stpetersburg,
    Finite(DiscreteDistribution),
}

fn standard_normal(u: f64) -> f64 {
    Normal::standard().inverse_cdf(u)
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        self.sampler().map(|_| ())
    }

    pub fn sampler(&self) -> Result<Sampler> {
        let bad = |m: String| Err(Error::BadSpec(m));
        let kind = match self {
            Self::Normal { mu, sigma } | Self::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return bad(format!("mu = {mu} must be finite"));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!("sigma = {sigma} must be > 0"));
                }
                if matches!(self, Self::Normal { .. }) {
                    Prepared::Normal { mu: *mu, sigma: *sigma }
                } else {
                    Prepared::Lognormal { mu: *mu, sigma: *sigma }
                }
            }
            Self::Pareto { alpha, xm } => {
                if !(alpha.is_finite() && *alpha > 0.0 && xm.is_finite() && *xm > 0.0) {
                    return bad(format!("pareto needs alpha > 0 and xm > 0, got {alpha}, {xm}"));
                }
                Prepared::Pareto { alpha: *alpha, xm: *xm }
            }
            Self::BernoulliScaled { p, v0, v1 } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return bad(format!("bernoulli_scaled: p = {p} must lie in (0, 1)"));
                }
                if !(v0.is_finite() && v1.is_finite()) {
                    return bad("bernoulli_scaled: values must be finite".into());
                }
                Prepared::Bernoulli { p: *p, v0: *v0, v1: *v1 }
            }
            Self::Stpetersburg => Prepared::Stpetersburg,
            Self::Finite { atoms } => Prepared::Finite(canonicalize(atoms).map_err(|e| Error::BadSpec(e.to_string()))?),
        };
        Ok(Sampler { kind })
    }
}

impl Sampler {
    pub fn draw_one(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.uniform();
        match &self.kind {
            Prepared::Normal { mu, sigma } => mu + sigma * standard_normal(u),
            Prepared::Pareto { alpha, xm } => xm * (1.0 - u).powf(-1.0 / alpha),
            Prepared::Lognormal { mu, sigma } => (mu + sigma * standard_normal(u)).exp(),
            Prepared::Bernoulli { p, v0, v1 } => {
                if u < *p {
                    *v1
                } else {
                    *v0
                }
            }
            Prepared::Stpetersburg => {
                let k = (-(1.0 - u).log2()).ceil() as i32;
                2f64.powi(k.clamp(1, STPETERSBURG_MAX_K))
            }
            Prepared::Finite(d) => {
                let i = d.cumulative().partition_point(|&c| c < u).min(d.len() - 1);
                d.values()[i]
            }
        }
    }

    pub fn draw_n(&self, n: usize, rng: &mut StreamRng) -> Vec<f64> {
        (0..n).map(|_| self.draw_one(rng)).collect()
    }
}

impl LossSampler for Sampler {
    fn draw(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        Ok(self.draw_n(n, rng))
    }
}

/// `n` iid draws from `spec` on stream 0 of `seed`.
pub fn sample(spec: &DistSpec, n: usize, seed: u64) -> Result<LossVector> {
    if n == 0 {
        return Err(Error::BadSpec("sample size must be >= 1".into()));
    }
    let s = spec.sampler()?;
    LossVector::new(s.draw_n(n, &mut StreamRng::new(seed, 0)))
}

/// Statistic of `n` draws on each seed, computed in parallel, in seed order.
pub fn replicate_statistics(
    spec: &DistSpec,
    n: usize,
    seeds: &[u64],
    stat: impl Fn(&LossVector) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    spec.validate()?;
    par::map_slice(seeds, |&s| stat(&sample(spec, n, s)?)).into_iter().collect()
}

/// Standard-normal features, labels `<w_star, x> + noise`.
pub fn gen_regression(dim: usize, n: usize, w_star: &[f64], noise: &DistSpec, seed: u64) -> Result<Dataset> {
    if dim == 0 || n == 0 {
        return Err(Error::BadSpec("gen_regression needs dim >= 1 and n >= 1".into()));
    }
    if w_star.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: w_star.len() });
    }
    let noise = noise.sampler()?;
    let mut rng = StreamRng::new(seed, 0);
    let rows = (0..n)
        .map(|_| {
            let features: Vec<f64> = (0..dim).map(|_| standard_normal(rng.uniform())).collect();
            let clean: f64 = features.iter().zip(w_star).map(|(x, w)| x * w).sum();
            let label = clean + noise.draw_one(&mut rng);
            Row { features, label, group: None }
        })
        .collect();
    Dataset::new(rows)
}

/// Tagged losses: group `g<i>` is drawn with probability `p_i`, then the loss
/// from that group's law. Rows come back in draw order; at small `n` some
/// groups may get no rows.
pub fn gen_grouped(groups: &[(f64, DistSpec)], n: usize, seed: u64) -> Result<Vec<(String, f64)>> {
    if groups.is_empty() || n == 0 {
        return Err(Error::BadSpec("gen_grouped needs at least one group and n >= 1".into()));
    }
    let picker =
        DistSpec::Finite { atoms: groups.iter().enumerate().map(|(i, g)| (i as f64, g.0)).collect() }.sampler()?;
    let samplers: Vec<Sampler> = groups.iter().map(|g| g.1.sampler()).collect::<Result<_>>()?;
    let mut rng = StreamRng::new(seed, 0);
    Ok((0..n)
        .map(|_| {
            let g = picker.draw_one(&mut rng) as usize;
            (format!("g{g}"), samplers[g].draw_one(&mut rng))
        })
        .collect())
}
