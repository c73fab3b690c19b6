//! Empirical training objectives: maps from a sample of losses to a number.
//!
//! Each objective also exposes per-loss sensitivity weights `c_i`, so the
//! subgradient with respect to model parameters is `sum c_i * dloss_i`. For
//! order-statistic objectives ties go to the lowest original index.

use serde::{Deserialize, Serialize};

use crate::distcore::{empirical_distribution, order_statistic, Direction, LossVector};
use crate::error::{Error, Result};
use crate::risks;
use crate::scalarfn::ScalarFunction;
use crate::solve::optimize_1d;

/// Slack on the L-statistic weight total.
const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Mean,
    /// Location M-estimate `argmin_theta sum rho((l_i - theta) / sigma)`.
    /// Without `sigma` the sample standard deviation is used (1 if it is 0).
    MEstimator {
        rho: ScalarFunction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    /// `sum w_i l_(i)` over ascending order statistics.
    LStatistic {
        weights: Vec<f64>,
    },
    KthLargest {
        k: usize,
    },
    AvgTopK {
        k: usize,
    },
    /// `(1/gamma) log mean exp(gamma l_i)`.
    ExpSmooth {
        gamma: f64,
    },
    /// Sample variance penalisation: `mean + eta sqrt(var / n)`.
    Svp {
        eta: f64,
    },
    /// CVaR of the empirical loss distribution.
    Cvar {
        beta: f64,
    },
    /// OCE of the empirical loss distribution.
    Oce {
        phi: ScalarFunction,
    },
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::MEstimator { .. } => "m_estimator",
            Self::LStatistic { .. } => "l_statistic",
            Self::KthLargest { .. } => "kth_largest",
            Self::AvgTopK { .. } => "avg_top_k",
            Self::ExpSmooth { .. } => "exp_smooth",
            Self::Svp { .. } => "svp",
            Self::Cvar { .. } => "cvar",
            Self::Oce { .. } => "oce",
        }
    }

    /// Parameter checks that do not depend on the sample size.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(format!("{}: {m}", self.name())));
        match self {
            Self::Mean => Ok(()),
            Self::MEstimator { rho, sigma } => {
                rho.validate()?;
                if !rho.is_convex() {
                    return bad(format!("rho family {} is not convex", rho.name()));
                }
                match sigma {
                    Some(s) if !(s.is_finite() && *s > 0.0) => bad(format!("sigma = {s} must be > 0")),
                    _ => Ok(()),
                }
            }
            Self::LStatistic { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
                    return bad("weights must be finite and non-empty".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return bad(format!("weights sum to {total}, not 1"));
                }
                Ok(())
            }
            Self::KthLargest { k } | Self::AvgTopK { k } => {
                if *k >= 1 {
                    Ok(())
                } else {
                    bad("k must be >= 1".into())
                }
            }
            Self::ExpSmooth { gamma } => {
                if gamma.is_finite() && *gamma != 0.0 {
                    Ok(())
                } else {
                    bad(format!("gamma = {gamma} must be finite and nonzero (use kind \"mean\" for gamma = 0)"))
                }
            }
            Self::Svp { eta } => {
                if eta.is_finite() && *eta >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("eta = {eta} must be >= 0"))
                }
            }
            Self::Cvar { beta } => {
                if *beta > 0.0 && *beta < 1.0 {
                    Ok(())
                } else {
                    Err(Error::BetaOutOfRange(*beta))
                }
            }
            Self::Oce { phi } => phi.check_oce_admissible(),
        }
    }

    /// Full validation against a sample of size `n`.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        match self {
            Self::LStatistic { weights } if weights.len() != n => {
                Err(Error::BadSpec(format!("l_statistic: {} weights for {n} losses", weights.len())))
            }
            Self::KthLargest { k } | Self::AvgTopK { k } if *k > n => {
                Err(Error::BadSpec(format!("{}: k = {k} exceeds the sample size {n}", self.name())))
            }
            _ => Ok(()),
        }
    }
}

/// Sample standard deviation with the `n - 1` divisor; 0 when `n = 1`.
fn sample_std(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / n as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn m_scale(v: &[f64], sigma: Option<f64>) -> f64 {
    sigma.unwrap_or_else(|| {
        let s = sample_std(v);
        if s > 0.0 {
            s
        } else {
            1.0
        }
    })
}

fn m_location(v: &LossVector, rho: &ScalarFunction, sigma: f64) -> Result<f64> {
    let xs = v.as_slice();
    let j = |t: f64| xs.iter().map(|&l| rho.eval_extended((l - t) / sigma)).sum::<f64>();
    let g = |t: f64| -xs.iter().map(|&l| rho.deriv_extended((l - t) / sigma)).sum::<f64>();
    optimize_1d(j, g, v.min() - 1.0, v.max() + 1.0).map(|(t, _)| t)
}

// Stabilised (1/gamma) log mean exp(gamma l).
fn log_mean_exp(xs: &[f64], gamma: f64) -> f64 {
    let c = if gamma > 0.0 {
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        xs.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let s = xs.iter().map(|&l| (gamma * (l - c)).exp_m1()).sum::<f64>() / xs.len() as f64;
    c + s.ln_1p() / gamma
}

/// Objective value on a loss sample.
pub fn eval_objective(spec: &ObjectiveSpec, v: &LossVector) -> Result<f64> {
    spec.validate_for(v.len())?;
    let xs = v.as_slice();
    let n = xs.len();
    Ok(match spec {
        ObjectiveSpec::Mean => v.mean(),
        ObjectiveSpec::MEstimator { rho, sigma } => m_location(v, rho, m_scale(xs, *sigma))?,
        ObjectiveSpec::LStatistic { weights } => v.sorted().iter().zip(weights).map(|(l, w)| l * w).sum(),
        ObjectiveSpec::KthLargest { k } => order_statistic(v, *k, Direction::Descending)?,
        ObjectiveSpec::AvgTopK { k } => {
            let sorted = v.sorted();
            sorted[n - k..].iter().sum::<f64>() / *k as f64
        }
        ObjectiveSpec::ExpSmooth { gamma } => log_mean_exp(xs, *gamma),
        ObjectiveSpec::Svp { eta } => {
            let var = sample_std(xs).powi(2);
            v.mean() + eta * (var / n as f64).sqrt()
        }
        ObjectiveSpec::Cvar { beta } => risks::cvar(&empirical_distribution(v), *beta)?.value,
        ObjectiveSpec::Oce { phi } => risks::oce(&empirical_distribution(v), phi)?.value,
    })
}

// Spread `rank_weights` (indexed by descending rank) over the original indices.
fn by_descending_rank(v: &LossVector, rank_weights: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut c = vec![0.0; v.len()];
    for (rank, i) in v.argsort(Direction::Descending).into_iter().enumerate() {
        c[i] = rank_weights(rank);
    }
    c
}

/// Per-loss sensitivities `c_i` with `d objective = sum c_i d l_i` (an
/// element of the subdifferential where the objective has kinks).
pub fn loss_weights(spec: &ObjectiveSpec, v: &LossVector) -> Result<Vec<f64>> {
    spec.validate_for(v.len())?;
    let xs = v.as_slice();
    let n = xs.len();
    let nf = n as f64;
    Ok(match spec {
        ObjectiveSpec::Mean => vec![1.0 / nf; n],
        ObjectiveSpec::MEstimator { rho, sigma } => {
            let scale = m_scale(xs, *sigma);
            let theta = m_location(v, rho, scale)?;
            let r: Vec<f64> = xs.iter().map(|&l| (l - theta) / scale).collect();
            let curv: Vec<f64> = r.iter().map(|&ri| rho.second_deriv(ri)).collect::<Result<_>>()?;
            let total: f64 = curv.iter().sum();
            if !(total.is_finite() && total > 0.0) {
                return Ok(vec![1.0 / nf; n]);
            }
            // With the default scale, sigma moves with the losses too.
            let scale_term = if sigma.is_none() && sample_std(xs) > 0.0 {
                let m = v.mean();
                let moment: f64 = curv.iter().zip(&r).map(|(c, r)| c * r).sum();
                Some((m, moment / ((nf - 1.0) * scale)))
            } else {
                None
            };
            curv.iter()
                .zip(xs)
                .map(|(&c, &l)| match scale_term {
                    Some((m, k)) => (c - k * (l - m)) / total,
                    None => c / total,
                })
                .collect()
        }
        ObjectiveSpec::LStatistic { weights } => by_descending_rank(v, |rank| weights[n - 1 - rank]),
        ObjectiveSpec::KthLargest { k } => by_descending_rank(v, |rank| if rank + 1 == *k { 1.0 } else { 0.0 }),
        ObjectiveSpec::AvgTopK { k } => by_descending_rank(v, |rank| if rank < *k { 1.0 / *k as f64 } else { 0.0 }),
        ObjectiveSpec::ExpSmooth { gamma } => {
            let c = log_mean_exp(xs, *gamma);
            let e: Vec<f64> = xs.iter().map(|&l| (gamma * (l - c)).exp()).collect();
            let total: f64 = e.iter().sum();
            e.into_iter().map(|x| x / total).collect()
        }
        ObjectiveSpec::Svp { eta } => {
            let var = sample_std(xs).powi(2);
            if n < 2 || var == 0.0 {
                vec![1.0 / nf; n]
            } else {
                let m = v.mean();
                let root = (var / nf).sqrt();
                xs.iter().map(|&l| 1.0 / nf + eta * (l - m) / (nf * (nf - 1.0) * root)).collect()
            }
        }
        ObjectiveSpec::Cvar { beta } => {
            // Empirical CVaR is the L-statistic with weights G(r/n) - G((r-1)/n)
            // on ascending rank r, G(u) = (u - beta)_+ / (1 - beta).
            let g = |u: f64| (u - beta).max(0.0) / (1.0 - beta);
            by_descending_rank(v, |rank| {
                let r = (n - rank) as f64;
                g(r / nf) - g((r - 1.0) / nf)
            })
        }
        ObjectiveSpec::Oce { phi } => {
            let theta = risks::oce(&empirical_distribution(v), phi)?
                .theta()
                .ok_or_else(|| Error::SolverFailure("oce returned no threshold".into()))?;
            xs.iter().map(|&l| phi.deriv(l - theta).map(|d| d / nf)).collect::<Result<_>>()?
        }
    })
}

/// `sum c_i dloss_i` for the weights of [`loss_weights`].
pub fn objective_subgradient(spec: &ObjectiveSpec, v: &LossVector, dloss: &[Vec<f64>]) -> Result<Vec<f64>> {
    if dloss.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: dloss.len() });
    }
    let dim = dloss[0].len();
    if let Some(bad) = dloss.iter().find(|g| g.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let c = loss_weights(spec, v)?;
    let mut out = vec![0.0; dim];
    for (ci, g) in c.iter().zip(dloss) {
        if *ci == 0.0 {
            continue;
        }
        for (o, gj) in out.iter_mut().zip(g) {
            *o += ci * gj;
        }
    }
    Ok(out)
}
