//! Risk functionals evaluated exactly on finite loss distributions.
//!
//! Every functional here takes a [`DiscreteDistribution`] and returns either a
//! plain value or a [`RiskResult`] carrying the inner solution (the minimising
//! threshold, or the worst-case reweighting for DRO). The declarative
//! [`RiskSpec`] plus [`risk_eval`] is the dispatch surface used by the CLI and
//! by `learners::evaluate`.
//!
//! One-dimensional inner problems are solved by bisection on the left
//! derivative, which lands on the smallest minimiser. For CVaR that is the
//! lower quantile.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distcore::{
    empirical_distribution, quantile, quantile_index, DiscreteDistribution, LossVector, SpectrumFunction,
};
use crate::error::{Error, Result};
use crate::par;
use crate::scalarfn::ScalarFunction;
use crate::solve::{bisect_sign_change, optimize_1d};

/// Slack on group-probability totals, matching `canonicalize`.
const GROUP_PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RiskSpec {
    Mean,
    VarQuantile {
        beta: f64,
    },
    Cvar {
        beta: f64,
    },
    CvarTail {
        beta: f64,
    },
    LRisk {
        spectrum: SpectrumFunction,
    },
    Oce {
        phi: ScalarFunction,
    },
    Entropic {
        gamma: f64,
    },
    MeanDeviation {
        p: f64,
        mode: DeviationMode,
    },
    MRisk {
        rho: ScalarFunction,
    },
    CenteredDeviation {
        base: Box<RiskSpec>,
    },
    Cpt {
        #[serde(default = "ScalarFunction::tk_value_gain")]
        v_plus: ScalarFunction,
        #[serde(default = "ScalarFunction::tk_value_loss")]
        v_minus: ScalarFunction,
        #[serde(default = "ScalarFunction::tk_weight_gain")]
        w_plus: ScalarFunction,
        #[serde(default = "ScalarFunction::tk_weight_loss")]
        w_minus: ScalarFunction,
        #[serde(rename = "ref", default)]
        reference: f64,
    },
    DroChi2 {
        delta: f64,
    },
    /// Mean plus variance of group-conditional means. On an ungrouped
    /// distribution there is a single group and this is the mean.
    FairnessMeanVar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviationMode {
    Centered,
    Semi,
    Threshold { theta: f64 },
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aux {
    Theta(f64),
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskResult {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<Aux>,
}

impl RiskResult {
    pub fn plain(value: f64) -> Self {
        Self { value, aux: None }
    }

    pub fn with_theta(value: f64, theta: f64) -> Self {
        Self { value, aux: Some(Aux::Theta(theta)) }
    }

    pub fn theta(&self) -> Option<f64> {
        match self.aux {
            Some(Aux::Theta(t)) => Some(t),
            _ => None,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.aux {
            Some(Aux::Weights(w)) => Some(w),
            _ => None,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::BetaOutOfRange(beta))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma != 0.0 {
        Ok(())
    } else {
        Err(Error::BadSpec(format!("gamma = {gamma} must be finite and nonzero")))
    }
}

fn check_weight_fn(w: &ScalarFunction, field: &str) -> Result<()> {
    w.validate()?;
    let ends = (w.eval(0.0), w.eval(1.0));
    match ends {
        (Ok(a), Ok(b)) if a.abs() <= 1e-12 && (b - 1.0).abs() <= 1e-12 && w.is_nondecreasing() => Ok(()),
        _ => Err(Error::BadSpec(format!(
            "cpt.{field}: weight function must be nondecreasing on [0, 1] with w(0) = 0 and w(1) = 1"
        ))),
    }
}

impl RiskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::VarQuantile { .. } => "var_quantile",
            Self::Cvar { .. } => "cvar",
            Self::CvarTail { .. } => "cvar_tail",
            Self::LRisk { .. } => "l_risk",
            Self::Oce { .. } => "oce",
            Self::Entropic { .. } => "entropic",
            Self::MeanDeviation { .. } => "mean_deviation",
            Self::MRisk { .. } => "m_risk",
            Self::CenteredDeviation { .. } => "centered_deviation",
            Self::Cpt { .. } => "cpt",
            Self::DroChi2 { .. } => "dro_chi2",
            Self::FairnessMeanVar => "fairness_mean_var",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Mean | Self::FairnessMeanVar => Ok(()),
            Self::VarQuantile { beta } | Self::Cvar { beta } | Self::CvarTail { beta } => check_beta(*beta),
            Self::LRisk { spectrum } => spectrum.validate(),
            Self::Oce { phi } => phi.check_oce_admissible(),
            Self::Entropic { gamma } => check_gamma(*gamma),
            Self::MeanDeviation { p, mode } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::BadSpec(format!("mean_deviation: p = {p} must be >= 1")));
                }
                if let DeviationMode::Threshold { theta } = mode {
                    if !theta.is_finite() {
                        return Err(Error::BadSpec("mean_deviation: threshold must be finite".into()));
                    }
                }
                Ok(())
            }
            Self::MRisk { rho } => {
                rho.validate()?;
                if rho.is_convex() {
                    Ok(())
                } else {
                    Err(Error::BadSpec(format!("m_risk: rho family {} is not convex", rho.name())))
                }
            }
            Self::CenteredDeviation { base } => match base.as_ref() {
                Self::Mean | Self::Entropic { .. } | Self::MRisk { .. } | Self::VarQuantile { .. } => base.validate(),
                other => Err(Error::BadSpec(format!(
                    "centered_deviation: base {} is not a location (use mean, entropic, m_risk or var_quantile)",
                    other.name()
                ))),
            },
            Self::Cpt { v_plus, v_minus, w_plus, w_minus, reference } => {
                v_plus.validate()?;
                v_minus.validate()?;
                check_weight_fn(w_plus, "w_plus")?;
                check_weight_fn(w_minus, "w_minus")?;
                if reference.is_finite() {
                    Ok(())
                } else {
                    Err(Error::BadSpec("cpt: ref must be finite".into()))
                }
            }
            Self::DroChi2 { delta } => {
                if delta.is_finite() && *delta >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::BadSpec(format!("dro_chi2: delta = {delta} must be >= 0")))
                }
            }
        }
    }
}

/// Evaluate `spec` on `d`.
pub fn risk_eval(spec: &RiskSpec, d: &DiscreteDistribution) -> Result<RiskResult> {
    spec.validate()?;
    match spec {
        RiskSpec::Mean | RiskSpec::FairnessMeanVar => Ok(RiskResult::plain(d.mean())),
        RiskSpec::VarQuantile { beta } => quantile(d, *beta).map(RiskResult::plain),
        RiskSpec::Cvar { beta } => cvar(d, *beta),
        RiskSpec::CvarTail { beta } => cvar_tail(d, *beta).map(RiskResult::plain),
        RiskSpec::LRisk { spectrum } => l_risk(d, spectrum).map(RiskResult::plain),
        RiskSpec::Oce { phi } => oce(d, phi),
        RiskSpec::Entropic { gamma } => entropic(d, *gamma).map(RiskResult::plain),
        RiskSpec::MeanDeviation { p, mode } => mean_deviation(d, *p, *mode),
        RiskSpec::MRisk { rho } => m_risk(d, rho),
        RiskSpec::CenteredDeviation { base } => centered_deviation(d, base).map(RiskResult::plain),
        RiskSpec::Cpt { v_plus, v_minus, w_plus, w_minus, reference } => {
            cpt_score(d, v_plus, v_minus, w_plus, w_minus, *reference).map(RiskResult::plain)
        }
        RiskSpec::DroChi2 { delta } => dro_chi2(d, *delta),
    }
}

/// Like [`risk_eval`], but the fairness risk uses the supplied groups.
pub fn risk_eval_grouped(
    spec: &RiskSpec,
    pooled: &DiscreteDistribution,
    groups: &[(f64, DiscreteDistribution)],
) -> Result<RiskResult> {
    match spec {
        RiskSpec::FairnessMeanVar => fairness_risk(groups).map(RiskResult::plain),
        _ => risk_eval(spec, pooled),
    }
}

/// Evaluate several specs on one distribution; results come back in spec order.
pub fn risk_eval_many(specs: &[RiskSpec], d: &DiscreteDistribution) -> Vec<Result<RiskResult>> {
    par::map_slice(specs, |s| risk_eval(s, d))
}

/// CVaR as the minimum of `theta + E[L - theta]_+ / (1 - beta)`, with
/// `theta* = quantile(d, beta)` reported in `aux`.
pub fn cvar(d: &DiscreteDistribution, beta: f64) -> Result<RiskResult> {
    check_beta(beta)?;
    let k = quantile_index(d, beta);
    let theta = d.values()[k];
    let tail: f64 = d.atoms().skip(k + 1).map(|(v, p)| p * (v - theta)).sum();
    Ok(RiskResult::with_theta(theta + tail / (1.0 - beta), theta))
}

/// The literal tail form `E[L 1{L >= Q_beta}] / (1 - beta)`.
///
/// Differs from [`cvar`] whenever the distribution has an atom at the
/// quantile; the two agree on (near-)atomless laws.
pub fn cvar_tail(d: &DiscreteDistribution, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let k = quantile_index(d, beta);
    let tail: f64 = d.atoms().skip(k).map(|(v, p)| p * v).sum();
    Ok(tail / (1.0 - beta))
}

/// Spectral risk `integral Q_u f(u) du`, integrated exactly: on each atom's
/// cumulative-probability cell the quantile is constant, so the integral is
/// `sum v_k (G(F_k) - G(F_{k-1}))` with `G` the spectrum's antiderivative.
pub fn l_risk(d: &DiscreteDistribution, spectrum: &SpectrumFunction) -> Result<f64> {
    spectrum.validate()?;
    let mut prev_g = 0.0;
    let mut acc = 0.0;
    for (&v, &c) in d.values().iter().zip(d.cumulative()) {
        let g = spectrum.cumulative(c);
        acc += v * (g - prev_g);
        prev_g = g;
    }
    Ok(acc)
}

// theta + E[phi(L - theta)] and its left derivative in theta.
fn shifted_objective<'a>(
    d: &'a DiscreteDistribution,
    phi: &'a ScalarFunction,
) -> (impl Fn(f64) -> f64 + 'a, impl Fn(f64) -> f64 + 'a) {
    let j = move |t: f64| t + d.expect(|v| phi.eval_extended(v - t));
    // Folding the 1 inside the expectation keeps g exactly 0 for linear phi.
    let g = move |t: f64| d.expect(|v| 1.0 - phi.deriv_extended(v - t));
    (j, g)
}

fn solve_shifted(d: &DiscreteDistribution, f: &ScalarFunction) -> Result<RiskResult> {
    let (j, g) = shifted_objective(d, f);
    let (theta, value) = optimize_1d(j, g, d.min() - 1.0, d.max() + 1.0)?;
    if !value.is_finite() {
        return Err(Error::SolverFailure(format!("objective is {value} at theta = {theta}")));
    }
    Ok(RiskResult::with_theta(value, theta))
}

/// Optimized certainty equivalent `inf_theta theta + E[phi(L - theta)]`.
///
/// `phi` must pass [`ScalarFunction::check_oce_admissible`]. Convexity is not
/// required: for a concave `phi` (e.g. the exponential disutility with
/// negative rate) the stationary point is returned, which is the value the
/// entropic identity calls for.
pub fn oce(d: &DiscreteDistribution, phi: &ScalarFunction) -> Result<RiskResult> {
    phi.check_oce_admissible()?;
    solve_shifted(d, phi)
}

/// `(1/gamma) log E[e^{gamma L}]`, shifted by the extreme atom so the
/// exponentials cannot overflow.
pub fn entropic(d: &DiscreteDistribution, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let c = if gamma > 0.0 { d.max() } else { d.min() };
    let s = d.expect(|v| (gamma * (v - c)).exp_m1());
    Ok(c + s.ln_1p() / gamma)
}

/// Mean plus an L^p deviation term, in one of four flavours.
///
/// `Optimized` takes the infimum over thresholds of the upper deviation, which
/// is zero (attained at the largest atom), so its value is the mean.
pub fn mean_deviation(d: &DiscreteDistribution, p: f64, mode: DeviationMode) -> Result<RiskResult> {
    RiskSpec::MeanDeviation { p, mode }.validate()?;
    let mu = d.mean();
    let root = |s: f64| s.powf(1.0 / p);
    Ok(match mode {
        DeviationMode::Centered => RiskResult::plain(mu + root(d.expect(|v| (v - mu).abs().powf(p)))),
        DeviationMode::Semi => RiskResult::plain(mu + root(d.expect(|v| (v - mu).max(0.0).powf(p)))),
        DeviationMode::Threshold { theta } => {
            RiskResult::with_theta(mu + root(d.expect(|v| (v - theta).max(0.0).powf(p))), theta)
        }
        DeviationMode::Optimized => RiskResult::with_theta(mu, d.max()),
    })
}

/// `inf_theta theta + E[rho(L - theta)]` for convex (possibly non-monotone) `rho`.
pub fn m_risk(d: &DiscreteDistribution, rho: &ScalarFunction) -> Result<RiskResult> {
    RiskSpec::MRisk { rho: rho.clone() }.validate()?;
    solve_shifted(d, rho)
}

// The location a centered deviation recentres by.
fn location(d: &DiscreteDistribution, base: &RiskSpec) -> Result<f64> {
    let r = risk_eval(base, d)?;
    Ok(match base {
        RiskSpec::MRisk { .. } => r.theta().unwrap_or(r.value),
        _ => r.value,
    })
}

/// `loc(L - loc(L))` for a location-type base risk.
pub fn centered_deviation(d: &DiscreteDistribution, base: &RiskSpec) -> Result<f64> {
    RiskSpec::CenteredDeviation { base: Box::new(base.clone()) }.validate()?;
    let shift = location(d, base)?;
    location(&d.shift(-shift)?, base)
}

/// Rank-dependent CPT score.
///
/// Atoms below `reference` get weight `w_minus(F_k) - w_minus(F_{k-1})` and
/// value `v_minus(x - ref)`; atoms at or above it get
/// `w_plus(S_k) - w_plus(S_{k+1})` with `S_k = P{L >= x_k}`, and value
/// `v_plus(x - ref)`.
pub fn cpt_score(
    d: &DiscreteDistribution,
    v_plus: &ScalarFunction,
    v_minus: &ScalarFunction,
    w_plus: &ScalarFunction,
    w_minus: &ScalarFunction,
    reference: f64,
) -> Result<f64> {
    RiskSpec::Cpt {
        v_plus: v_plus.clone(),
        v_minus: v_minus.clone(),
        w_plus: w_plus.clone(),
        w_minus: w_minus.clone(),
        reference,
    }
    .validate()?;
    let cum = d.cumulative();
    let mut acc = 0.0;
    for (k, &x) in d.values().iter().enumerate() {
        let below = if k == 0 { 0.0 } else { cum[k - 1] };
        let u = x - reference;
        if x < reference {
            let w = w_minus.eval(cum[k].min(1.0))? - w_minus.eval(below)?;
            acc += w * v_minus.eval(u)?;
        } else {
            let s_here = 1.0 - below;
            let s_next = 1.0 - cum[k];
            let w = w_plus.eval(s_here.clamp(0.0, 1.0))? - w_plus.eval(s_next.clamp(0.0, 1.0))?;
            acc += w * v_plus.eval(u)?;
        }
    }
    Ok(acc)
}

// Worst-case reweighting for a fixed inverse multiplier s:
// q_i = p_i (1 + s (v_i - mu))_+ with mu set so the q_i sum to one.
fn chi2_weights(values: &[f64], probs: &[f64], s: f64) -> Vec<f64> {
    let n = values.len();
    // Active set is always a top block of atoms; grow it from the largest.
    let mut mass = 0.0;
    let mut first_moment = 0.0;
    let mut mu = f64::NAN;
    for j in (0..n).rev() {
        mass += probs[j];
        first_moment += probs[j] * values[j];
        let cand = (mass + s * first_moment - 1.0) / (s * mass);
        let cut = cand - 1.0 / s;
        let next_out = j == 0 || values[j - 1] <= cut;
        if values[j] > cut && next_out {
            mu = cand;
            break;
        }
    }
    let mut q: Vec<f64> = values.iter().zip(probs).map(|(&v, &p)| p * (1.0 + s * (v - mu)).max(0.0)).collect();
    let total: f64 = q.iter().sum();
    for w in &mut q {
        *w /= total;
    }
    q
}

fn chi2_divergence(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).map(|(&qi, &pi)| pi * (qi / pi - 1.0).powi(2)).sum()
}

/// Worst-case mean over the chi-square ball `sum p (q/p - 1)^2 <= delta`.
///
/// The maximiser has the form `q_i = p_i (1 + s (v_i - mu))_+`; `mu` follows
/// from the simplex constraint exactly and `s` is found by bisection on the
/// divergence. The worst-case `q` is returned in `aux`.
pub fn dro_chi2(d: &DiscreteDistribution, delta: f64) -> Result<RiskResult> {
    RiskSpec::DroChi2 { delta }.validate()?;
    let values = d.values();
    let probs = d.probs();
    let n = d.len();
    let weighted = |q: Vec<f64>| {
        let value = q.iter().zip(values).map(|(q, v)| q * v).sum();
        RiskResult { value, aux: Some(Aux::Weights(q)) }
    };
    if delta == 0.0 || n == 1 {
        return Ok(weighted(probs.to_vec()));
    }
    let p_top = probs[n - 1];
    if delta >= (1.0 - p_top) / p_top {
        let mut q = vec![0.0; n];
        q[n - 1] = 1.0;
        return Ok(weighted(q));
    }
    let excess = |s: f64| chi2_divergence(&chi2_weights(values, probs, s), probs) - delta;
    let mut hi = (delta / d.variance()).sqrt().max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while excess(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::SolverFailure("dro_chi2: multiplier search diverged".into()));
        }
    }
    let (s, _) = bisect_sign_change(|s| if s == 0.0 { -delta } else { excess(s) }, 0.0, hi)?;
    if s == 0.0 {
        return Ok(weighted(probs.to_vec()));
    }
    Ok(weighted(chi2_weights(values, probs, s)))
}

/// `E_S[R_s] + Var_S[R_s]` over groups `(prob, law)`, with `R_s` the group mean.
pub fn fairness_risk(groups: &[(f64, DiscreteDistribution)]) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::BadGroups("need at least one group".into()));
    }
    let total: f64 = groups.iter().map(|g| g.0).sum();
    if groups.iter().any(|g| !(g.0.is_finite() && g.0 > 0.0)) {
        return Err(Error::BadGroups("group probabilities must be positive".into()));
    }
    if (total - 1.0).abs() > GROUP_PROB_TOL {
        return Err(Error::BadGroups(format!("group probabilities sum to {total}")));
    }
    let means: Vec<(f64, f64)> = groups.iter().map(|(p, d)| (p / total, d.mean())).collect();
    let centre: f64 = means.iter().map(|(p, m)| p * m).sum();
    let spread: f64 = means.iter().map(|(p, m)| p * (m - centre).powi(2)).sum();
    Ok(centre + spread)
}

/// Group tagged losses into `(share, empirical law)` pairs ordered by tag.
/// Groups with no rows simply do not appear.
pub fn empirical_groups(rows: &[(String, f64)]) -> Result<Vec<(f64, DiscreteDistribution)>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_tag: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (tag, loss) in rows {
        by_tag.entry(tag.as_str()).or_default().push(*loss);
    }
    let n = rows.len() as f64;
    by_tag
        .into_values()
        .map(|losses| {
            let share = losses.len() as f64 / n;
            Ok((share, empirical_distribution(&LossVector::new(losses)?)))
        })
        .collect()
}

/// The sure payout `c` with `f(c) = E[f(X)]`.
pub fn certainty_equivalent(payout: &DiscreteDistribution, f: &ScalarFunction) -> Result<f64> {
    f.validate()?;
    if !f.is_strictly_increasing() {
        return Err(Error::NotMonotone);
    }
    let (lo, hi) = (payout.min(), payout.max());
    let target = payout.atoms().map(|(v, p)| f.eval(v).map(|fv| p * fv)).sum::<Result<f64>>()?;
    if lo == hi {
        return Ok(lo);
    }
    let (a, b) = bisect_sign_change(|c| f.eval_extended(c) - target, lo, hi)?;
    let (fa, fb) = (f.eval_extended(a) - target, f.eval_extended(b) - target);
    Ok(if fb.abs() < fa.abs() { b } else { a })
}

/// Utility-based OCE of a payout law, `sup_theta theta + E[f(X - theta)]`.
///
/// Equals `-oce(-X, u -> -f(-u))`.
pub fn oce_from_utility(payout: &DiscreteDistribution, f: &ScalarFunction) -> Result<f64> {
    f.validate()?;
    if !(f.is_concave() && f.is_nondecreasing()) {
        return Err(Error::BadSpec(format!("oce_from_utility: {} must be concave and nondecreasing", f.name())));
    }
    let (j, g) = shifted_objective(payout, f);
    let (_, value) = optimize_1d(j, g, payout.min() - 1.0, payout.max() + 1.0)?;
    if !value.is_finite() {
        return Err(Error::SolverFailure(format!("oce_from_utility: objective is {value}")));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distcore::canonicalize;
    use crate::rng::StreamRng;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn uniform4() -> DiscreteDistribution {
        DiscreteDistribution::uniform(&[1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn bernoulli() -> DiscreteDistribution {
        DiscreteDistribution::uniform(&[0.0, 1.0]).unwrap()
    }

    fn random_dist(rng: &mut StreamRng, max_atoms: usize) -> DiscreteDistribution {
        let n = 1 + rng.index(max_atoms);
        let raw: Vec<(f64, f64)> = (0..n).map(|_| (rng.uniform() * 20.0 - 10.0, rng.uniform() + 0.05)).collect();
        let total: f64 = raw.iter().map(|a| a.1).sum();
        let raw: Vec<(f64, f64)> = raw.into_iter().map(|(v, p)| (v, p / total)).collect();
        canonicalize(&raw).unwrap()
    }

    #[test]
    fn mean_and_point_mass() {
        assert_eq!(risk_eval(&RiskSpec::Mean, &uniform4()).unwrap().value, 2.5);
        let pm = DiscreteDistribution::point_mass(3.25).unwrap();
        let specs = [
            RiskSpec::Mean,
            RiskSpec::Cvar { beta: 0.9 },
            RiskSpec::Entropic { gamma: 1.0 },
            RiskSpec::Entropic { gamma: -3.0 },
            RiskSpec::LRisk { spectrum: SpectrumFunction::Power { k: 1.0 } },
            RiskSpec::Oce { phi: ScalarFunction::OceExp { gamma: 2.0 } },
            RiskSpec::Oce { phi: ScalarFunction::OceCvar { beta: 0.3 } },
            RiskSpec::DroChi2 { delta: 0.7 },
        ];
        for s in &specs {
            let v = risk_eval(s, &pm).unwrap().value;
            assert!((v - 3.25).abs() < 1e-12, "{s:?}: {v}");
        }
    }

    #[test]
    fn cvar_examples() {
        let r = cvar(&uniform4(), 0.5).unwrap();
        assert_eq!(r.value, 3.5);
        assert_eq!(r.theta(), Some(2.0));
        assert_eq!(cvar(&uniform4(), 0.75).unwrap().value, 4.0);
        assert_eq!(cvar(&DiscreteDistribution::point_mass(5.0).unwrap(), 0.9).unwrap().value, 5.0);
        assert!((cvar(&uniform4(), 1e-9).unwrap().value - 2.5).abs() < 1e-6);
        assert!(matches!(cvar(&uniform4(), 1.0), Err(Error::BetaOutOfRange(_))));
    }

    #[test]
    fn cvar_tail_examples() {
        assert_eq!(cvar_tail(&uniform4(), 0.5).unwrap(), 4.5);
        assert_eq!(cvar_tail(&DiscreteDistribution::point_mass(5.0).unwrap(), 0.5).unwrap(), 10.0);
    }

    #[test]
    fn l_risk_examples() {
        let d = uniform4();
        assert_eq!(l_risk(&d, &SpectrumFunction::Uniform).unwrap(), 2.5);
        assert_eq!(l_risk(&d, &SpectrumFunction::Power { k: 1.0 }).unwrap(), 3.125);
        let step = l_risk(&d, &SpectrumFunction::Cvar { beta: 0.5 }).unwrap();
        assert!((step - 3.5).abs() < 1e-15);
        let piecewise = SpectrumFunction::Piecewise { breakpoints: vec![0.0, 0.5, 1.0], levels: vec![0.0, 2.0] };
        assert!((l_risk(&d, &piecewise).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn oce_examples() {
        let d = uniform4();
        let lin = oce(&d, &ScalarFunction::Linear).unwrap();
        assert!((lin.value - 2.5).abs() < 1e-12);
        let c = oce(&d, &ScalarFunction::OceCvar { beta: 0.5 }).unwrap();
        assert!((c.value - 3.5).abs() < 1e-12);
        let e = oce(&d, &ScalarFunction::OceExp { gamma: 0.7 }).unwrap();
        assert!((e.value - entropic(&d, 0.7).unwrap()).abs() < 1e-12);
        assert!(oce(&d, &ScalarFunction::Squared).is_err());
    }

    #[test]
    fn entropic_examples() {
        assert!((entropic(&bernoulli(), 1.0).unwrap() - 0.620_114_506_958_277_5).abs() < 1e-15);
        assert_eq!(entropic(&DiscreteDistribution::point_mass(-2.0).unwrap(), 4.0).unwrap(), -2.0);
        assert!((entropic(&uniform4(), 1e-9).unwrap() - 2.5).abs() < 1e-6);
        assert!(entropic(&uniform4(), 0.0).is_err());
        // no overflow with large rate
        let v = entropic(&uniform4(), 800.0).unwrap();
        assert!(v.is_finite() && v <= 4.0 && v > 3.99);
    }

    #[test]
    fn mean_deviation_examples() {
        let b = bernoulli();
        assert!((mean_deviation(&b, 2.0, DeviationMode::Centered).unwrap().value - 1.0).abs() < 1e-15);
        let semi = mean_deviation(&b, 2.0, DeviationMode::Semi).unwrap().value;
        assert!((semi - 0.853_553_390_593_273_8).abs() < 1e-15);
        let pm = DiscreteDistribution::point_mass(4.0).unwrap();
        for mode in [
            DeviationMode::Centered,
            DeviationMode::Semi,
            DeviationMode::Threshold { theta: 4.0 },
            DeviationMode::Optimized,
        ] {
            assert_eq!(mean_deviation(&pm, 1.5, mode).unwrap().value, 4.0);
        }
        let opt = mean_deviation(&uniform4(), 2.0, DeviationMode::Optimized).unwrap();
        assert_eq!(opt.value, 2.5);
        assert_eq!(opt.theta(), Some(4.0));
        assert!(mean_deviation(&b, 0.5, DeviationMode::Semi).is_err());
    }

    #[test]
    fn m_risk_examples() {
        let r = m_risk(&bernoulli(), &ScalarFunction::Squared).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(r.theta().unwrap().abs() < 1e-12);
        let r = m_risk(&DiscreteDistribution::point_mass(3.0).unwrap(), &ScalarFunction::Squared).unwrap();
        assert!((r.value - 2.75).abs() < 1e-12);
        assert!((r.theta().unwrap() - 2.5).abs() < 1e-12);
        let r = m_risk(&uniform4(), &ScalarFunction::OceCvar { beta: 0.5 }).unwrap();
        assert!((r.value - 3.5).abs() < 1e-12);
        // rho with slope below one everywhere: the program is unbounded
        assert!(matches!(m_risk(&uniform4(), &ScalarFunction::Huber { c: 0.5 }), Err(Error::SolverFailure(_))));
    }

    #[test]
    fn m_risk_catoni_needs_wider_bracket() {
        let r = m_risk(&DiscreteDistribution::point_mass(0.0).unwrap(), &ScalarFunction::Catoni).unwrap();
        // stationary where psi(-theta) = 1
        let x = -1.0 + (2.0 * E - 1.0).sqrt();
        assert!((r.theta().unwrap() + x).abs() < 1e-12);
    }

    #[test]
    fn centered_deviation_is_zero_for_locations() {
        let b = bernoulli();
        for base in [
            RiskSpec::Mean,
            RiskSpec::Entropic { gamma: 1.0 },
            RiskSpec::VarQuantile { beta: 0.3 },
            RiskSpec::MRisk { rho: ScalarFunction::Squared },
        ] {
            let v = centered_deviation(&b, &base).unwrap();
            assert!(v.abs() < 1e-12, "{base:?}: {v}");
        }
        assert!(centered_deviation(&b, &RiskSpec::Cvar { beta: 0.5 }).is_err());
    }

    #[test]
    fn cpt_examples() {
        let lin = ScalarFunction::Linear;
        let d = DiscreteDistribution::uniform(&[-1.0, 1.0]).unwrap();
        assert_eq!(cpt_score(&d, &lin, &lin, &lin, &lin, 0.0).unwrap(), 0.0);
        let d4 = uniform4();
        assert!((cpt_score(&d4, &lin, &lin, &lin, &lin, 0.0).unwrap() - 2.5).abs() < 1e-15);
        let pm = DiscreteDistribution::point_mass(2.0).unwrap();
        let spec = RiskSpec::Cpt {
            v_plus: ScalarFunction::tk_value_gain(),
            v_minus: ScalarFunction::tk_value_loss(),
            w_plus: ScalarFunction::tk_weight_gain(),
            w_minus: ScalarFunction::tk_weight_loss(),
            reference: 0.5,
        };
        assert!((risk_eval(&spec, &pm).unwrap().value - 1.5f64.powf(0.88)).abs() < 1e-15);
        let RiskSpec::Cpt { reference, .. } = spec.clone() else { unreachable!() };
        assert_eq!(reference, 0.5);
        let default_spec = RiskSpec::Cpt {
            v_plus: ScalarFunction::tk_value_gain(),
            v_minus: ScalarFunction::tk_value_loss(),
            w_plus: ScalarFunction::tk_weight_gain(),
            w_minus: ScalarFunction::tk_weight_loss(),
            reference: 0.0,
        };
        let v = risk_eval(&default_spec, &d).unwrap().value;
        assert!((v - -0.600_832_632_093_310_5).abs() < 1e-14, "{v}");
    }

    #[test]
    fn dro_examples() {
        let b = bernoulli();
        assert_eq!(dro_chi2(&b, 0.0).unwrap().value, 0.5);
        let r = dro_chi2(&b, 0.02).unwrap();
        assert!((r.value - 0.570_710_678_118_654_8).abs() < 1e-12, "{}", r.value);
        let q = r.weights().unwrap();
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((chi2_divergence(q, b.probs()) - 0.02).abs() < 1e-12);
        assert_eq!(dro_chi2(&DiscreteDistribution::point_mass(3.0).unwrap(), 5.0).unwrap().value, 3.0);
        // radius large enough to move all mass to the top atom
        assert_eq!(dro_chi2(&uniform4(), 3.0).unwrap().value, 4.0);
    }

    #[test]
    fn dro_clipped_regime_matches_brute_force() {
        // three atoms, radius large enough that the lowest weight clips to zero
        let d = canonicalize(&[(0.0, 0.5), (1.0, 0.3), (5.0, 0.2)]).unwrap();
        let delta = 1.5;
        let r = dro_chi2(&d, delta).unwrap();
        let mut best = f64::NEG_INFINITY;
        let steps = 1000;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let q = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                if chi2_divergence(&q, d.probs()) <= delta {
                    best = best.max(q[1] + 5.0 * q[2]);
                }
            }
        }
        assert!(r.value >= best - 1e-12 && r.value - best < 1e-2, "{} vs {}", r.value, best);
        assert!(r.weights().unwrap()[0] < 1e-12 || chi2_divergence(r.weights().unwrap(), d.probs()) <= delta + 1e-9);
    }

    #[test]
    fn fairness_examples() {
        let g0 = DiscreteDistribution::point_mass(0.0).unwrap();
        let g1 = DiscreteDistribution::point_mass(1.0).unwrap();
        assert_eq!(fairness_risk(&[(0.5, g0.clone()), (0.5, g1.clone())]).unwrap(), 0.75);
        assert_eq!(fairness_risk(&[(1.0, uniform4())]).unwrap(), 2.5);
        assert_eq!(fairness_risk(&[(0.3, uniform4()), (0.7, uniform4())]).unwrap(), 2.5);
        assert!(fairness_risk(&[]).is_err());
        assert!(fairness_risk(&[(0.4, g0), (0.4, g1)]).is_err());
    }

    #[test]
    fn certainty_equivalent_examples() {
        let d = DiscreteDistribution::uniform(&[1.0, E * E]).unwrap();
        let ce = certainty_equivalent(&d, &ScalarFunction::LogUtility { shift: 0.0 }).unwrap();
        assert!((ce - E).abs() < 1e-12);
        assert!((certainty_equivalent(&uniform4(), &ScalarFunction::Linear).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(
            certainty_equivalent(&DiscreteDistribution::point_mass(7.0).unwrap(), &ScalarFunction::Linear).unwrap(),
            7.0
        );
        assert!(matches!(certainty_equivalent(&d, &ScalarFunction::Squared), Err(Error::NotMonotone)));
    }

    #[test]
    fn oce_from_utility_examples() {
        assert!((oce_from_utility(&uniform4(), &ScalarFunction::Linear).unwrap() - 2.5).abs() < 1e-12);
        let pm = DiscreteDistribution::point_mass(1.5).unwrap();
        assert!((oce_from_utility(&pm, &ScalarFunction::ExpUtility { gamma: 2.0 }).unwrap() - 1.5).abs() < 1e-12);
        let gamma = 0.8;
        let v = oce_from_utility(&uniform4(), &ScalarFunction::ExpUtility { gamma }).unwrap();
        let dual = -entropic(&uniform4().negate(), gamma).unwrap();
        assert!((v - dual).abs() < 1e-9);
    }

    #[test]
    fn theta_reproduces_value() {
        let mut rng = StreamRng::new(5, 0);
        for _ in 0..50 {
            let d = random_dist(&mut rng, 16);
            let r = oce(&d, &ScalarFunction::OceExp { gamma: 0.5 }).unwrap();
            let t = r.theta().unwrap();
            let direct = t + d.expect(|v| ((0.5 * (v - t)).exp_m1()) / 0.5);
            assert!((direct - r.value).abs() < 1e-8);
            assert!(t >= d.min() - 1.0 && t <= d.max() + 1.0);
            let r = cvar(&d, 0.8).unwrap();
            let t = r.theta().unwrap();
            let direct = t + d.expect(|v| (v - t).max(0.0)) / 0.2;
            assert!((direct - r.value).abs() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn identities_hold(seed in any::<u64>(), bi in 0usize..4, gi in 0usize..4) {
            let beta = [0.1, 0.5, 0.9, 0.99][bi];
            let gamma = [0.5, -0.5, 2.0, -2.0][gi];
            let d = random_dist(&mut StreamRng::new(seed, 0), 32);
            let c = cvar(&d, beta).unwrap().value;
            let phi = ScalarFunction::OceCvar { beta };
            let step = SpectrumFunction::Cvar { beta };
            let via_oce = oce(&d, &phi).unwrap().value;
            let via_m = m_risk(&d, &phi).unwrap().value;
            let via_l = l_risk(&d, &step).unwrap();
            prop_assert!((via_oce - c).abs() < 1e-9);
            prop_assert!((via_m - c).abs() < 1e-9);
            prop_assert!((via_l - c).abs() < 1e-9);
            let e = entropic(&d, gamma).unwrap();
            let exp_phi = ScalarFunction::OceExp { gamma };
            let via_exp = oce(&d, &exp_phi).unwrap().value;
            prop_assert!((via_exp - e).abs() < 1e-9);
        }

        #[test]
        fn translation_equivariance(seed in any::<u64>(), shift in -50.0f64..50.0) {
            let d = random_dist(&mut StreamRng::new(seed, 1), 16);
            let moved = d.shift(shift).unwrap();
            let specs = [
                RiskSpec::Cvar { beta: 0.7 },
                RiskSpec::Entropic { gamma: 1.3 },
                RiskSpec::Oce { phi: ScalarFunction::OceExp { gamma: 0.4 } },
                RiskSpec::VarQuantile { beta: 0.4 },
            ];
            for s in &specs {
                let a = risk_eval(s, &d).unwrap().value;
                let b = risk_eval(s, &moved).unwrap().value;
                prop_assert!((b - a - shift).abs() < 1e-9, "{:?}", s);
            }
            let ta = m_risk(&d, &ScalarFunction::Huber { c: 2.0 }).unwrap().theta().unwrap();
            let tb = m_risk(&moved, &ScalarFunction::Huber { c: 2.0 }).unwrap().theta().unwrap();
            prop_assert!((tb - ta - shift).abs() < 1e-9);
            let dev = |x: &DiscreteDistribution| mean_deviation(x, 2.0, DeviationMode::Semi).unwrap().value - x.mean();
            prop_assert!((dev(&d) - dev(&moved)).abs() < 1e-9);
        }

        #[test]
        fn bounds_and_jensen(seed in any::<u64>()) {
            let d = random_dist(&mut StreamRng::new(seed, 2), 32);
            let (lo, hi) = (d.min() - 1e-9, d.max() + 1e-9);
            let specs = [
                RiskSpec::Cvar { beta: 0.6 },
                RiskSpec::Entropic { gamma: -1.0 },
                RiskSpec::LRisk { spectrum: SpectrumFunction::Power { k: 2.0 } },
                RiskSpec::VarQuantile { beta: 0.2 },
                RiskSpec::DroChi2 { delta: 0.3 },
                RiskSpec::Oce { phi: ScalarFunction::OceExp { gamma: 1.0 } },
            ];
            for s in &specs {
                let v = risk_eval(s, &d).unwrap().value;
                prop_assert!(v >= lo && v <= hi, "{:?}: {} not in [{}, {}]", s, v, lo, hi);
            }
            let m = d.mean();
            prop_assert!(entropic(&d, 0.5).unwrap() >= m - 1e-12);
            prop_assert!(entropic(&d, -0.5).unwrap() <= m + 1e-12);
            prop_assert!(dro_chi2(&d, 0.5).unwrap().value >= dro_chi2(&d, 0.1).unwrap().value - 1e-12);
        }

        #[test]
        fn duality(seed in any::<u64>(), fi in 0usize..3) {
            let d = random_dist(&mut StreamRng::new(seed, 3), 8);
            let f = [
                ScalarFunction::Linear,
                ScalarFunction::LogUtility { shift: 1.0 },
                ScalarFunction::ExpUtility { gamma: 0.6 },
            ][fi].clone();
            let primal = oce_from_utility(&d, &f).unwrap();
            let dual = -oce(&d.negate(), &ScalarFunction::reflect(f)).unwrap().value;
            prop_assert!((primal - dual).abs() < 1e-9);
        }
    }
}
