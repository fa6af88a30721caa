//! Bracketed scalar root finding.
//!
//! Every equation solved in this crate is a strictly monotone function of one
//! variable on a known bracket, so the solvers here only need to be robust,
//! not clever: bisection, and Newton steps that fall back to bisection
//! whenever they leave the bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute tolerance on the root.
    pub x_abs: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            x_abs: 1e-12,
            max_iter: 200,
        }
    }
}

fn check_bracket(what: &'static str, lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<()> {
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0
    {
        return Err(Error::NoBracket {
            what,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    Ok(())
}

/// Plain bisection on `[lo, hi]`. `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(what: &'static str, mut f: F, mut lo: f64, mut hi: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    check_bracket(what, lo, hi, f_lo, f_hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol.x_abs || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        what,
        lo,
        hi,
        residual: f_lo,
        iterations: tol.max_iter,
    })
}

/// Newton's method on `[lo, hi]`, safeguarded by bisection.
///
/// `f` returns the function value and its derivative. A Newton step that
/// leaves the current bracket is replaced by a bisection step.
pub fn newton_bracketed<F>(
    what: &'static str,
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: Tolerance,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    check_bracket(what, lo, hi, f_lo, f_hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    // Orient so that f(lo) < 0 < f(hi) in the update below.
    let increasing = f_lo < 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut residual = f64::NAN;
    for _ in 0..tol.max_iter {
        let (fx, dfx) = f(x);
        residual = fx;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 0.5 * tol.x_abs || hi - lo <= tol.x_abs {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        what,
        lo,
        hi,
        residual,
        iterations: tol.max_iter,
    })
}

/// Expands `[lo, hi]` geometrically away from `anchor` until `f` changes sign
/// or `limit` is reached on both sides.
pub fn expand_bracket<F>(
    what: &'static str,
    mut f: F,
    anchor: f64,
    initial_step: f64,
    limit: f64,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let f_anchor = f(anchor);
    if f_anchor == 0.0 {
        return Ok((anchor, anchor));
    }
    let mut step = initial_step;
    loop {
        let lo = (anchor - step).max(-limit);
        let hi = (anchor + step).min(limit);
        let f_lo = f(lo);
        if f_lo.signum() != f_anchor.signum() {
            return Ok((lo, anchor));
        }
        let f_hi = f(hi);
        if f_hi.signum() != f_anchor.signum() {
            return Ok((anchor, hi));
        }
        if lo <= -limit && hi >= limit {
            return Err(Error::NoBracket {
                what,
                lo,
                hi,
                f_lo,
                f_hi,
            });
        }
        step *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect("sqrt2", |x| x * x - 2.0, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_matches_bisection_on_cubic() {
        let tol = Tolerance::default();
        let f = |x: f64| x * x * x - x - 1.0;
        let a = bisect("cubic", f, 1.0, 2.0, tol).unwrap();
        let b = newton_bracketed("cubic", |x| (f(x), 3.0 * x * x - 1.0), 1.0, 2.0, tol).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn newton_survives_bad_derivative() {
        // Derivative deliberately wrong by a large factor: steps leave the bracket
        // and bisection takes over.
        let r = newton_bracketed(
            "bad",
            |x| (x - 0.3, 1e-9),
            0.0,
            1.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let err = bisect("none", |x| x * x + 1.0, -1.0, 1.0, Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn bracket_expansion() {
        let (lo, hi) = expand_bracket("lin", |x| x - 37.0, 0.0, 1.0, 100.0).unwrap();
        assert!(lo <= 37.0 && 37.0 <= hi);
        assert!(expand_bracket("none", |_| 1.0, 0.0, 1.0, 10.0).is_err());
    }
}
