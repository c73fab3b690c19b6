//! One-dimensional root bracketing shared by the risk solvers.

use crate::error::{Error, Result};

const MAX_ITERS: usize = 200;

/// Bisection for a sign change of a monotone `g` on `[lo, hi]`.
///
/// `g` may be nondecreasing (the usual case: derivative of a convex objective)
/// or nonincreasing (derivative of a concave objective); the orientation is
/// read off the endpoints. Values `>= 0` count as the nonnegative side, so for a
/// nondecreasing `g` the result converges to `sup { t : g(t) < 0 }`. Iterates
/// until the midpoint coincides with an endpoint. Returns the final `(lo, hi)`.
pub(crate) fn bisect_sign_change(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BadBracket { lo, hi });
    }
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::SolverFailure("derivative is NaN at the bracket ends".into()));
    }
    if g_lo == 0.0 && g_hi == 0.0 {
        return Ok((lo, lo));
    }
    let increasing = if g_lo < 0.0 && g_hi >= 0.0 {
        true
    } else if g_lo > 0.0 && g_hi <= 0.0 {
        false
    } else if g_lo == 0.0 {
        return Ok((lo, lo));
    } else {
        return Err(Error::SolverFailure(format!(
            "derivative does not change sign on [{lo}, {hi}] (g = {g_lo}, {g_hi})"
        )));
    };
    for _ in 0..MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.is_nan() {
            return Err(Error::SolverFailure(format!("derivative is NaN at {mid}")));
        }
        let left_side = if increasing { gm < 0.0 } else { gm > 0.0 };
        if left_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Doublings of the bracket margin tried before giving up on a sign change.
const MAX_EXPANSIONS: usize = 40;

/// Stationary point of a one-dimensional objective `j` whose left derivative
/// is `g`, searched from `[lo, hi]`.
///
/// A nondecreasing `g` (convex `j`) yields the smallest minimiser; a
/// nonincreasing one (concave `j`) yields the maximiser. If `g` has no sign
/// change on the starting bracket, the bracket is widened by doubling its
/// margin on both sides. Returns `(theta, j(theta))` for whichever final
/// bracket end is better.
pub(crate) fn optimize_1d(
    j: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BadBracket { lo, hi });
    }
    let mut expansions = 0;
    loop {
        let (a, b) = (g(lo), g(hi));
        if a.is_nan() || b.is_nan() {
            return Err(Error::SolverFailure("derivative is NaN at the bracket ends".into()));
        }
        let same_strict_sign = (a < 0.0 && b < 0.0) || (a > 0.0 && b > 0.0);
        if !same_strict_sign {
            break;
        }
        if expansions == MAX_EXPANSIONS {
            return Err(Error::SolverFailure(format!(
                "no stationary point found on [{lo}, {hi}]; the objective looks unbounded"
            )));
        }
        let margin = hi - lo;
        lo -= margin;
        hi += margin;
        expansions += 1;
    }
    let maximize = g(lo) > 0.0;
    let (a, b) = bisect_sign_change(&g, lo, hi)?;
    let (ja, jb) = (j(a), j(b));
    let take_b = if maximize { jb > ja } else { jb < ja };
    Ok(if take_b { (b, jb) } else { (a, ja) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_roots_in_both_orientations() {
        let (lo, hi) = bisect_sign_change(|t| t - 0.3, -1.0, 2.0).unwrap();
        assert!(lo <= 0.3 && 0.3 <= hi && hi - lo < 1e-15);
        let (lo, hi) = bisect_sign_change(|t| 0.3 - t, -1.0, 2.0).unwrap();
        assert!((lo - 0.3).abs() < 1e-15 && (hi - 0.3).abs() < 1e-15);
    }

    #[test]
    fn no_sign_change_fails() {
        assert!(matches!(bisect_sign_change(|t| t + 10.0, -1.0, 2.0), Err(Error::SolverFailure(_))));
        assert!(matches!(bisect_sign_change(|t| t, 2.0, 1.0), Err(Error::BadBracket { .. })));
    }

    #[test]
    fn step_function_converges_to_jump() {
        let (_, hi) = bisect_sign_change(|t| if t < 2.0 { -1.0 } else { 0.0 }, 0.0, 5.0).unwrap();
        assert!((hi - 2.0).abs() < 1e-14);
    }

    #[test]
    fn optimize_finds_min_and_max() {
        let (t, v) = optimize_1d(|t| (t - 1.0) * (t - 1.0), |t| 2.0 * (t - 1.0), 0.0, 0.5).unwrap();
        assert!((t - 1.0).abs() < 1e-12 && v < 1e-20);
        let (t, v) = optimize_1d(|t| -(t - 3.0).abs(), |t| if t <= 3.0 { 1.0 } else { -1.0 }, -1.0, 10.0).unwrap();
        assert!((t - 3.0).abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn unbounded_objective_fails() {
        assert!(matches!(optimize_1d(|t| t, |_| 1.0, 0.0, 1.0), Err(Error::SolverFailure(_))));
    }
}
