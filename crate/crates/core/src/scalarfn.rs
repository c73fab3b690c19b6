//! Named one-dimensional function families.
//!
//! One type covers every scalar function the rest of the crate consumes:
//! M-estimator potentials (`rho`), OCE disutilities (`phi`), payout utilities
//! (`f`) and the prospect-theory value and probability-weighting functions.
//! Each family reports its value, a one-sided derivative, a second derivative
//! and the shape facts (convexity, monotonicity) the solvers rely on.
//!
//! Derivatives at kinks are right derivatives throughout; [`ScalarFunction::deriv_left`]
//! gives the other side when a caller needs the whole subdifferential.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prospect-theory defaults. These are the conventional Tversky–Kahneman fits,
/// not values mandated by the risk definitions themselves.
pub const TK_ALPHA: f64 = 0.88;
pub const TK_LAMBDA_GAIN: f64 = 1.0;
pub const TK_LAMBDA_LOSS: f64 = 2.25;
pub const TK_GAMMA_GAIN: f64 = 0.61;
pub const TK_GAMMA_LOSS: f64 = 0.69;

/// Lower end (exclusive) of the probability-weighting exponent range in which
/// the weighting function stays monotone.
pub const TK_WEIGHT_MIN_C: f64 = 0.28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFunction {
    /// `u^2`
    Squared,
    /// `|u|^p`, `p >= 1`
    AbsPower { p: f64 },
    /// Quadratic on `[-c, c]`, linear outside.
    Huber { c: f64 },
    /// Convex potential whose derivative is Catoni's narrowest influence
    /// function `psi(u) = sign(u) log(1 + |u| + u^2/2)`.
    Catoni,
    /// `max(u, 0)^p`, `p >= 1`
    PosPartPower { p: f64 },
    /// `max(u, 0) / (1 - beta)`: the disutility whose OCE is CVaR.
    OceCvar { beta: f64 },
    /// `(e^{gamma u} - 1) / gamma`: the disutility whose OCE is the entropic risk.
    OceExp { gamma: f64 },
    /// `u`
    Linear,
    /// `log(u + shift)` on `u > -shift`.
    LogUtility {
        #[serde(default)]
        shift: f64,
    },
    /// `(1 - e^{-gamma u}) / gamma`
    ExpUtility { gamma: f64 },
    /// `lambda * sign(u) * |u|^alpha`
    TkValue { alpha: f64, lambda: f64 },
    /// `p^c / (p^c + (1 - p)^c)^{1/c}` on `[0, 1]`.
    TkWeight { c: f64 },
    /// `u -> -inner(-u)`; turns a payout utility into a loss disutility.
    Reflected { inner: Box<ScalarFunction> },
}

impl ScalarFunction {
    pub fn reflect(inner: ScalarFunction) -> Self {
        Self::Reflected { inner: Box::new(inner) }
    }

    pub fn tk_value_gain() -> Self {
        Self::TkValue { alpha: TK_ALPHA, lambda: TK_LAMBDA_GAIN }
    }

    pub fn tk_value_loss() -> Self {
        Self::TkValue { alpha: TK_ALPHA, lambda: TK_LAMBDA_LOSS }
    }

    pub fn tk_weight_gain() -> Self {
        Self::TkWeight { c: TK_GAMMA_GAIN }
    }

    pub fn tk_weight_loss() -> Self {
        Self::TkWeight { c: TK_GAMMA_LOSS }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Squared => "squared",
            Self::AbsPower { .. } => "abs_power",
            Self::Huber { .. } => "huber",
            Self::Catoni => "catoni",
            Self::PosPartPower { .. } => "pos_part_power",
            Self::OceCvar { .. } => "oce_cvar",
            Self::OceExp { .. } => "oce_exp",
            Self::Linear => "linear",
            Self::LogUtility { .. } => "log_utility",
            Self::ExpUtility { .. } => "exp_utility",
            Self::TkValue { .. } => "tk_value",
            Self::TkWeight { .. } => "tk_weight",
            Self::Reflected { .. } => "reflected",
        }
    }

    /// Check the family's parameter constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadSpec(format!("{}: {msg}", self.name())));
        match self {
            Self::Squared | Self::Catoni | Self::Linear => Ok(()),
            Self::AbsPower { p } | Self::PosPartPower { p } => {
                if p.is_finite() && *p >= 1.0 {
                    Ok(())
                } else {
                    bad(format!("p = {p} must be >= 1"))
                }
            }
            Self::Huber { c } => {
                if c.is_finite() && *c > 0.0 {
                    Ok(())
                } else {
                    bad(format!("c = {c} must be > 0"))
                }
            }
            Self::OceCvar { beta } => {
                if *beta > 0.0 && *beta < 1.0 {
                    Ok(())
                } else {
                    bad(format!("beta = {beta} must lie in (0, 1)"))
                }
            }
            Self::OceExp { gamma } | Self::ExpUtility { gamma } => {
                if gamma.is_finite() && *gamma != 0.0 {
                    Ok(())
                } else {
                    bad(format!("gamma = {gamma} must be finite and nonzero"))
                }
            }
            Self::LogUtility { shift } => {
                if shift.is_finite() && *shift >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("shift = {shift} must be >= 0"))
                }
            }
            Self::TkValue { alpha, lambda } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    bad(format!("alpha = {alpha} must lie in (0, 1]"))
                } else if !(lambda.is_finite() && *lambda > 0.0) {
                    bad(format!("lambda = {lambda} must be > 0"))
                } else {
                    Ok(())
                }
            }
            Self::TkWeight { c } => {
                if *c > TK_WEIGHT_MIN_C && *c <= 1.0 {
                    Ok(())
                } else {
                    bad(format!("c = {c} must lie in ({TK_WEIGHT_MIN_C}, 1]"))
                }
            }
            Self::Reflected { inner } => inner.validate(),
        }
    }

    /// Open domain `(lo, hi)`; `TkWeight` is the closed interval `[0, 1]`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::LogUtility { shift } => (-shift, f64::INFINITY),
            Self::TkWeight { .. } => (0.0, 1.0),
            Self::Reflected { inner } => {
                let (lo, hi) = inner.domain();
                (-hi, -lo)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn in_domain(&self, u: f64) -> bool {
        match self {
            Self::LogUtility { shift } => u + shift > 0.0,
            Self::TkWeight { .. } => (0.0..=1.0).contains(&u),
            Self::Reflected { inner } => inner.in_domain(-u),
            _ => true,
        }
    }

    fn domain_err(&self, u: f64) -> Error {
        Error::DomainError { family: self.name(), arg: u }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if u.is_nan() || !self.in_domain(u) {
            return Err(self.domain_err(u));
        }
        Ok(match self {
            Self::Squared => u * u,
            Self::AbsPower { p } => u.abs().powf(*p),
            Self::Huber { c } => {
                let a = u.abs();
                if a <= *c {
                    0.5 * u * u
                } else {
                    c * (a - 0.5 * c)
                }
            }
            Self::Catoni => catoni_potential(u.abs()),
            Self::PosPartPower { p } => u.max(0.0).powf(*p),
            Self::OceCvar { beta } => u.max(0.0) / (1.0 - beta),
            Self::OceExp { gamma } => (gamma * u).exp_m1() / gamma,
            Self::Linear => u,
            Self::LogUtility { shift } => (u + shift).ln(),
            Self::ExpUtility { gamma } => -(-gamma * u).exp_m1() / gamma,
            Self::TkValue { alpha, lambda } => lambda * u.signum() * u.abs().powf(*alpha),
            Self::TkWeight { c } => tk_weight(u, *c),
            Self::Reflected { inner } => -inner.eval(-u)?,
        })
    }

    /// Right derivative.
    pub fn deriv(&self, u: f64) -> Result<f64> {
        self.slope(u, Side::Right)
    }

    /// Left derivative.
    pub fn deriv_left(&self, u: f64) -> Result<f64> {
        self.slope(u, Side::Left)
    }

    fn slope(&self, u: f64, side: Side) -> Result<f64> {
        if u.is_nan() || !self.in_domain(u) {
            return Err(self.domain_err(u));
        }
        let right = side == Side::Right;
        Ok(match self {
            Self::Squared => 2.0 * u,
            Self::AbsPower { p } => {
                if u == 0.0 {
                    if *p == 1.0 {
                        if right {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        0.0
                    }
                } else {
                    p * u.signum() * u.abs().powf(p - 1.0)
                }
            }
            Self::Huber { c } => u.clamp(-c, *c),
            Self::Catoni => u.signum() * (u.abs() + 0.5 * u * u).ln_1p(),
            Self::PosPartPower { p } => {
                if u > 0.0 {
                    p * u.powf(p - 1.0)
                } else if u == 0.0 && *p == 1.0 && right {
                    1.0
                } else {
                    0.0
                }
            }
            Self::OceCvar { beta } => {
                if u > 0.0 || (u == 0.0 && right) {
                    1.0 / (1.0 - beta)
                } else {
                    0.0
                }
            }
            Self::OceExp { gamma } => (gamma * u).exp(),
            Self::Linear => 1.0,
            Self::LogUtility { shift } => 1.0 / (u + shift),
            Self::ExpUtility { gamma } => (-gamma * u).exp(),
            Self::TkValue { alpha, lambda } => {
                if u == 0.0 {
                    if *alpha == 1.0 {
                        *lambda
                    } else {
                        f64::INFINITY
                    }
                } else {
                    lambda * alpha * u.abs().powf(alpha - 1.0)
                }
            }
            Self::TkWeight { c } => tk_weight_deriv(u, *c),
            // d/du [-g(-u)] from the right is g's left derivative at -u.
            Self::Reflected { inner } => inner.slope(-u, side.flip())?,
        })
    }

    /// Second derivative (right-sided at kinks).
    pub fn second_deriv(&self, u: f64) -> Result<f64> {
        if u.is_nan() || !self.in_domain(u) {
            return Err(self.domain_err(u));
        }
        Ok(match self {
            Self::Squared => 2.0,
            Self::AbsPower { p } => {
                if *p == 1.0 {
                    0.0
                } else if u == 0.0 {
                    if *p < 2.0 {
                        f64::INFINITY
                    } else if *p == 2.0 {
                        2.0
                    } else {
                        0.0
                    }
                } else {
                    p * (p - 1.0) * u.abs().powf(p - 2.0)
                }
            }
            Self::Huber { c } => {
                if (-c..*c).contains(&u) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Catoni => {
                let a = u.abs();
                (1.0 + a) / (1.0 + a + 0.5 * a * a)
            }
            Self::PosPartPower { p } => {
                if *p == 1.0 || u < 0.0 {
                    0.0
                } else if u == 0.0 {
                    if *p < 2.0 {
                        f64::INFINITY
                    } else if *p == 2.0 {
                        2.0
                    } else {
                        0.0
                    }
                } else {
                    p * (p - 1.0) * u.powf(p - 2.0)
                }
            }
            Self::OceCvar { .. } | Self::Linear => 0.0,
            Self::OceExp { gamma } => gamma * (gamma * u).exp(),
            Self::LogUtility { shift } => -1.0 / ((u + shift) * (u + shift)),
            Self::ExpUtility { gamma } => -gamma * (-gamma * u).exp(),
            Self::TkValue { alpha, lambda } => {
                if *alpha == 1.0 {
                    0.0
                } else if u == 0.0 {
                    f64::INFINITY
                } else {
                    lambda * alpha * (alpha - 1.0) * u.signum() * u.abs().powf(alpha - 2.0)
                }
            }
            Self::TkWeight { c } => {
                let h = 1e-6 * (1.0 + u.abs());
                let lo = (u - h).max(0.0);
                let hi = (u + h).min(1.0);
                (tk_weight_deriv(hi, *c) - tk_weight_deriv(lo, *c)) / (hi - lo)
            }
            Self::Reflected { inner } => -inner.second_deriv(-u)?,
        })
    }

    /// Value with the out-of-domain limit substituted (`+inf` for a convex
    /// barrier, `-inf` for a concave one). Used by brute-force oracles.
    pub fn eval_extended(&self, u: f64) -> f64 {
        match self.eval(u) {
            Ok(v) => v,
            Err(_) => match self {
                Self::LogUtility { .. } => f64::NEG_INFINITY,
                Self::Reflected { inner } => -inner.eval_extended(-u),
                _ => f64::NAN,
            },
        }
    }

    /// Right derivative with the out-of-domain limit substituted. Log-type
    /// barriers report an infinite slope past their boundary, which lets
    /// bisection step back into the domain.
    pub fn deriv_extended(&self, u: f64) -> f64 {
        match self.deriv(u) {
            Ok(v) => v,
            Err(_) => match self {
                Self::LogUtility { .. } => f64::INFINITY,
                Self::Reflected { inner } => inner.deriv_extended(-u),
                _ => f64::NAN,
            },
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Self::Squared
            | Self::AbsPower { .. }
            | Self::Huber { .. }
            | Self::Catoni
            | Self::PosPartPower { .. }
            | Self::OceCvar { .. }
            | Self::Linear => true,
            Self::OceExp { gamma } => *gamma > 0.0,
            Self::ExpUtility { gamma } => *gamma < 0.0,
            Self::TkValue { alpha, .. } => *alpha == 1.0,
            Self::LogUtility { .. } | Self::TkWeight { .. } => false,
            Self::Reflected { inner } => inner.is_concave(),
        }
    }

    pub fn is_concave(&self) -> bool {
        match self {
            Self::Linear | Self::LogUtility { .. } => true,
            Self::OceExp { gamma } => *gamma < 0.0,
            Self::ExpUtility { gamma } => *gamma > 0.0,
            Self::TkValue { alpha, .. } => *alpha == 1.0,
            Self::Reflected { inner } => inner.is_convex(),
            _ => false,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            Self::Squared | Self::AbsPower { .. } | Self::Huber { .. } | Self::Catoni => false,
            Self::Reflected { inner } => inner.is_nondecreasing(),
            _ => true,
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        match self {
            Self::PosPartPower { .. } | Self::OceCvar { .. } => false,
            Self::Reflected { inner } => inner.is_strictly_increasing(),
            other => other.is_nondecreasing(),
        }
    }

    /// OCE disutility conditions: nondecreasing, `phi(0) = 0` and
    /// `1` in the subdifferential at 0.
    pub fn check_oce_admissible(&self) -> Result<()> {
        self.validate()?;
        let fail = |m: &str| Err(Error::BadSpec(format!("{} is not an OCE disutility: {m}", self.name())));
        if !self.is_nondecreasing() {
            return fail("not nondecreasing");
        }
        if self.eval(0.0).map(|v| v.abs() > 1e-12).unwrap_or(true) {
            return fail("phi(0) != 0");
        }
        let left = self.deriv_left(0.0)?;
        let right = self.deriv(0.0)?;
        if !(left <= 1.0 + 1e-12 && right >= 1.0 - 1e-12) {
            return fail("1 is not a subgradient at 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl Side {
    fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

// Antiderivative of ln(1 + a + a^2/2) on a >= 0, zero at the origin.
fn catoni_potential(a: f64) -> f64 {
    if a < 1e-3 {
        let a2 = a * a;
        return a2 / 2.0 - a2 * a2 / 24.0 + a2 * a2 * a / 40.0;
    }
    (1.0 + a) * (a + 0.5 * a * a).ln_1p() - 2.0 * a + 2.0 * (a / (2.0 + a)).atan()
}

fn tk_weight(p: f64, c: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let pc = p.powf(c);
    let qc = (1.0 - p).powf(c);
    pc / (pc + qc).powf(1.0 / c)
}

fn tk_weight_deriv(p: f64, c: f64) -> f64 {
    if c == 1.0 {
        return 1.0;
    }
    if p <= 0.0 || p >= 1.0 {
        return f64::INFINITY;
    }
    let a = p.powf(c) + (1.0 - p).powf(c);
    let w = tk_weight(p, c);
    w * (c / p - (p.powf(c - 1.0) - (1.0 - p).powf(c - 1.0)) / a)
}
