//! Loss samples, finite loss distributions and their order/quantile machinery.
//!
//! There is exactly one quantile convention in the crate: the left-continuous
//! generalised inverse `Q(beta) = inf { u : F(u) >= beta }`. Every module that
//! needs a quantile goes through [`quantile`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the raw probability total before renormalisation.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Totals closer to one than this are not rescaled.
const RENORM_TOL: f64 = 1e-12;

/// A non-empty sample of finite losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&bad) = losses.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(bad));
        }
        Ok(Self(losses))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices sorted by loss, ties broken by lowest index first.
    pub fn argsort(&self, direction: Direction) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        match direction {
            Direction::Ascending => idx.sort_by(|&a, &b| self.0[a].total_cmp(&self.0[b])),
            Direction::Descending => idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a])),
        }
        idx
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl TryFrom<Vec<f64>> for LossVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LossVector> for Vec<f64> {
    fn from(v: LossVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ascending,
    Descending,
}

/// A finite loss law: strictly ascending atoms with positive probabilities
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    // cum[k] = P{L <= values[k]}; the last entry is exactly 1.
    cum: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn point_mass(value: f64) -> Result<Self> {
        canonicalize(&[(value, 1.0)])
    }

    /// Equal weights on the given values (duplicates merge).
    pub fn uniform(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let p = 1.0 / values.len() as f64;
        let raw: Vec<(f64, f64)> = values.iter().map(|&v| (v, p)).collect();
        canonicalize(&raw)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Cumulative probabilities `F(values[k])`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// `E[g(L)]`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, p)| p * g(x)).sum()
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// The law of `g(L)`; atoms that collide after mapping are merged.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        let raw: Vec<(f64, f64)> = self.atoms().map(|(x, p)| (g(x), p)).collect();
        canonicalize(&raw)
    }

    /// The law of `L + c`.
    pub fn shift(&self, c: f64) -> Result<Self> {
        self.map_values(|x| x + c)
    }

    /// The law of `-L`.
    pub fn negate(&self) -> Self {
        let values: Vec<f64> = self.values.iter().rev().map(|x| -x).collect();
        let probs: Vec<f64> = self.probs.iter().rev().copied().collect();
        Self::from_sorted_unchecked(values, probs)
    }

    fn from_sorted_unchecked(values: Vec<f64>, probs: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Self { values, probs, cum }
    }
}

/// Sort, merge bit-identical values and renormalise.
///
/// The raw total must be within [`PROB_SUM_TOL`] of one.
pub fn canonicalize(raw: &[(f64, f64)]) -> Result<DiscreteDistribution> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut atoms = Vec::with_capacity(raw.len());
    let mut total = 0.0;
    for &(v, p) in raw {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue(v));
        }
        if !(p.is_finite() && p > 0.0 && p <= 1.0 + PROB_SUM_TOL) {
            return Err(Error::BadProbability(format!("probability {p} for value {v}")));
        }
        // -0.0 and 0.0 must land on the same atom.
        let v = if v == 0.0 { 0.0 } else { v };
        atoms.push((v, p));
        total += p;
    }
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::BadProbability(format!("probabilities sum to {total}")));
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match values.last() {
            Some(last) if last.to_bits() == v.to_bits() => *probs.last_mut().unwrap() += p,
            _ => {
                values.push(v);
                probs.push(p);
            }
        }
    }
    // Already-normalised input is left untouched, which makes this idempotent.
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > RENORM_TOL {
        for p in &mut probs {
            *p /= sum;
        }
    }
    Ok(DiscreteDistribution::from_sorted_unchecked(values, probs))
}

/// Each distinct loss gets probability multiplicity / n.
pub fn empirical_distribution(v: &LossVector) -> DiscreteDistribution {
    let mut sorted = v.sorted();
    for x in &mut sorted {
        if *x == 0.0 {
            *x = 0.0;
        }
    }
    let n = sorted.len() as f64;
    let mut values: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for x in sorted {
        match values.last() {
            Some(last) if last.to_bits() == x.to_bits() => *counts.last_mut().unwrap() += 1,
            _ => {
                values.push(x);
                counts.push(1);
            }
        }
    }
    let probs = counts.iter().map(|&c| c as f64 / n).collect();
    DiscreteDistribution::from_sorted_unchecked(values, probs)
}

/// `P{L <= u}`.
pub fn cdf(d: &DiscreteDistribution, u: f64) -> f64 {
    let idx = d.values.partition_point(|&x| x <= u);
    if idx == 0 {
        0.0
    } else {
        d.cum[idx - 1]
    }
}

/// Left-continuous quantile `inf { u : F(u) >= beta }`.
pub fn quantile(d: &DiscreteDistribution, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    Ok(d.values[quantile_index(d, beta)])
}

pub(crate) fn quantile_index(d: &DiscreteDistribution, beta: f64) -> usize {
    d.cum.partition_point(|&c| c < beta).min(d.len() - 1)
}

/// The k-th smallest (ascending) or k-th largest (descending) loss, 1-based.
pub fn order_statistic(v: &LossVector, k: usize, direction: Direction) -> Result<f64> {
    let n = v.len();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    let sorted = v.sorted();
    Ok(match direction {
        Direction::Ascending => sorted[k - 1],
        Direction::Descending => sorted[n - k],
    })
}

/// A spectrum (weighting density) `f` on [0, 1] for L-risks.
///
/// `Piecewise` is the general form: nonnegative, nondecreasing levels on the
/// pieces between `breakpoints` (which run from 0 to 1). `Power { k }` is the
/// density `(k + 1) u^k`; `k = 1` gives `f(u) = 2u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumFunction {
    Uniform,
    Cvar { beta: f64 },
    Power { k: f64 },
    Piecewise { breakpoints: Vec<f64>, levels: Vec<f64> },
}

impl SpectrumFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uniform => Ok(()),
            Self::Cvar { beta } => {
                if *beta > 0.0 && *beta < 1.0 {
                    Ok(())
                } else {
                    Err(Error::BadSpectrum(format!("cvar beta {beta} outside (0, 1)")))
                }
            }
            Self::Power { k } => {
                if k.is_finite() && *k >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::BadSpectrum(format!("power exponent {k} must be >= 0")))
                }
            }
            Self::Piecewise { breakpoints, levels } => {
                let bad = |m: &str| Err(Error::BadSpectrum(m.to_string()));
                if levels.is_empty() || breakpoints.len() != levels.len() + 1 {
                    return bad("need m levels and m + 1 breakpoints");
                }
                if breakpoints[0] != 0.0 || breakpoints[levels.len()] != 1.0 {
                    return bad("breakpoints must start at 0 and end at 1");
                }
                if breakpoints.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
                    return bad("breakpoints must be strictly increasing");
                }
                if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return bad("levels must be finite and nonnegative");
                }
                if levels.windows(2).any(|w| w[1] < w[0]) {
                    return bad("levels must be nondecreasing");
                }
                let mass: f64 = levels.iter().zip(breakpoints.windows(2)).map(|(l, w)| l * (w[1] - w[0])).sum();
                if (mass - 1.0).abs() > 1e-12 {
                    return bad(&format!("spectrum integrates to {mass}, not 1"));
                }
                Ok(())
            }
        }
    }

    pub fn density(&self, u: f64) -> f64 {
        match self {
            Self::Uniform => 1.0,
            Self::Cvar { beta } => {
                if u > *beta {
                    1.0 / (1.0 - beta)
                } else {
                    0.0
                }
            }
            Self::Power { k } => (k + 1.0) * u.powf(*k),
            Self::Piecewise { breakpoints, levels } => {
                let j = breakpoints.partition_point(|&b| b < u).clamp(1, levels.len());
                levels[j - 1]
            }
        }
    }

    /// `G(u) = integral of f over [0, u]`, exact for every variant.
    pub fn cumulative(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Self::Uniform => u,
            Self::Cvar { beta } => (u - beta).max(0.0) / (1.0 - beta),
            Self::Power { k } => u.powf(k + 1.0),
            Self::Piecewise { breakpoints, levels } => {
                let mut acc = 0.0;
                for (l, w) in levels.iter().zip(breakpoints.windows(2)) {
                    if u <= w[0] {
                        break;
                    }
                    acc += l * (u.min(w[1]) - w[0]);
                }
                acc
            }
        }
    }
}
