//! Closed-form building blocks: the `ell` family of threshold functions,
//! the likelihood ratio of the signal, posterior maps, the inverse boundary
//! maps from posterior levels to signal levels, and the indifference point
//! between the two ambiguous actions.
//!
//! Most of the work happens in log-odds coordinates `x = log(r / (1 - r))`,
//! where the threshold functions take a simple form:
//!
//! * `ell(r)       = 2x + 2 sinh x`
//! * `ell_tilde(r) = x + e^x`
//! * `ell_hat(r)   = x tanh(x / 2)`
//! * `1 / (r(1-r)) = 2 + 2 cosh x`
//!
//! which keeps evaluation and inversion well conditioned near 0 and 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::root::{self, Tolerance};

/// Probabilities are clamped to `[PROB_GUARD, 1 - PROB_GUARD]` before the
/// threshold functions are evaluated.
pub const PROB_GUARD: f64 = 1e-12;

fn check_open(name: &'static str, r: f64) -> Result<f64> {
    if r > 0.0 && r < 1.0 {
        Ok(r)
    } else {
        Err(Error::Domain { name, value: r })
    }
}

fn check_prob(name: &'static str, r: f64) -> Result<f64> {
    Ok(check_open(name, r)?.clamp(PROB_GUARD, 1.0 - PROB_GUARD))
}

/// `log(r / (1 - r))`. No domain check.
pub fn logit(r: f64) -> f64 {
    r.ln() - (-r).ln_1p()
}

/// Inverse of [`logit`].
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Threshold functions in log-odds coordinates.
pub mod log_odds {
    use super::*;

    const INNER: Tolerance = Tolerance {
        x_abs: 1e-15,
        max_iter: 200,
    };

    pub fn ell(x: f64) -> f64 {
        2.0 * x + 2.0 * x.sinh()
    }

    /// Derivative of [`ell`] with respect to the log-odds.
    pub fn ell_prime(x: f64) -> f64 {
        2.0 + 2.0 * x.cosh()
    }

    pub fn ell_tilde(x: f64) -> f64 {
        x + x.exp()
    }

    pub fn ell_hat(x: f64) -> f64 {
        x * (0.5 * x).tanh()
    }

    /// `1 / (r (1 - r))`.
    pub fn curvature(x: f64) -> f64 {
        2.0 + 2.0 * x.cosh()
    }

    /// Solves `ell(x) = y`.
    pub fn ell_inverse(y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(0.0);
        }
        let a = y.abs();
        let lo = (a / 4.0).asinh();
        let hi = (a / 4.0).min((a / 2.0).asinh());
        let x = root::newton_bracketed(
            "ell inverse",
            |x| (ell(x) - a, ell_prime(x)),
            lo,
            hi.max(lo),
            INNER,
        )?;
        Ok(x.copysign(y))
    }

    /// Solves `ell(x + d) - ell(x) = delta` for `d`.
    ///
    /// Written as `2d + 4 cosh(x + d/2) sinh(d/2) = delta` so the difference
    /// never cancels, even far in the tails.
    pub fn ell_shift(x: f64, delta: f64) -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        let f = |d: f64| {
            (
                2.0 * d + 4.0 * (x + 0.5 * d).cosh() * (0.5 * d).sinh() - delta,
                2.0 + 2.0 * (x + d).cosh(),
            )
        };
        let bound = delta / 4.0;
        let (lo, hi) = if delta > 0.0 { (0.0, bound) } else { (bound, 0.0) };
        root::newton_bracketed("ell shift", f, lo, hi, INNER)
    }

    /// `ell_tilde(x + d) - ell_tilde(x)` without cancellation.
    pub fn ell_tilde_diff(x: f64, d: f64) -> f64 {
        d + x.exp() * d.exp_m1()
    }

    /// `curvature(x + d) - curvature(x)` without cancellation.
    pub fn curvature_diff(x: f64, d: f64) -> f64 {
        4.0 * (x + 0.5 * d).sinh() * (0.5 * d).sinh()
    }

    /// `ell_hat(y) - ell_hat(r) - ell(r) (y - r)` for `y = sigmoid(x_y)`,
    /// `r = sigmoid(x_r)`: height of the convex `ell_hat` above its tangent
    /// at `r`.
    pub fn tangent_gap(x_y: f64, x_r: f64) -> f64 {
        let y = sigmoid(x_y);
        let r = sigmoid(x_r);
        ell_hat(x_y) - ell_hat(x_r) - ell(x_r) * (y - r)
    }
}

/// `ell(r) = 2 log(r/(1-r)) - 1/r + 1/(1-r)`, strictly increasing from
/// `-inf` to `+inf` on `(0, 1)`.
pub fn ell(r: f64) -> Result<f64> {
    Ok(log_odds::ell(logit(check_prob("r", r)?)))
}

/// `log(r/(1-r)) + r/(1-r)`.
pub fn ell_tilde(r: f64) -> Result<f64> {
    Ok(log_odds::ell_tilde(logit(check_prob("r", r)?)))
}

/// `(2r - 1) log(r/(1-r))`; its derivative is [`ell`].
pub fn ell_hat(r: f64) -> Result<f64> {
    let r = check_prob("r", r)?;
    Ok((2.0 * r - 1.0) * logit(r))
}

/// The unique `r` in `(0, 1)` with `ell(r) = y`.
pub fn ell_inverse(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::InvalidParams(format!("ell target {y} is not finite")));
    }
    Ok(sigmoid(log_odds::ell_inverse(y)?))
}

/// Drifts, volatility and flow cost of sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    theta0: f64,
    theta1: f64,
    sigma: f64,
    c: f64,
}

impl ModelParams {
    pub fn new(theta0: f64, theta1: f64, sigma: f64, c: f64) -> Result<Self> {
        if ![theta0, theta1, sigma, c].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("model parameters must be finite".into()));
        }
        if theta0 >= theta1 {
            return Err(Error::InvalidParams(format!(
                "need theta0 < theta1, got {theta0} >= {theta1}"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        if c <= 0.0 {
            return Err(Error::InvalidParams(format!("cost c must be positive, got {c}")));
        }
        Ok(Self {
            theta0,
            theta1,
            sigma,
            c,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Normalised sampling cost `2 c sigma^2 / (theta1 - theta0)^2`.
    pub fn c_hat(&self) -> f64 {
        let gap = self.theta1 - self.theta0;
        2.0 * self.c * self.sigma * self.sigma / (gap * gap)
    }

    /// `(theta1 - theta0) / sigma^2`: sensitivity of the log likelihood ratio
    /// to the signal.
    pub fn signal_gain(&self) -> f64 {
        (self.theta1 - self.theta0) / (self.sigma * self.sigma)
    }

    /// `(theta0 + theta1) / 2`: time drift of every boundary curve.
    pub fn mid_drift(&self) -> f64 {
        0.5 * (self.theta0 + self.theta1)
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.theta0, self.theta1, self.sigma, c)
    }
}

/// Interval `[m_lo, m_hi]` of prior probabilities on `theta1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorInterval {
    m_lo: f64,
    m_hi: f64,
}

impl PriorInterval {
    pub fn new(m_lo: f64, m_hi: f64) -> Result<Self> {
        check_prob("m_lo", m_lo)?;
        check_prob("m_hi", m_hi)?;
        if m_lo > m_hi {
            return Err(Error::InvalidParams(format!(
                "prior interval needs m_lo <= m_hi, got [{m_lo}, {m_hi}]"
            )));
        }
        Ok(Self { m_lo, m_hi })
    }

    pub fn singleton(m: f64) -> Result<Self> {
        Self::new(m, m)
    }

    pub fn m_lo(&self) -> f64 {
        self.m_lo
    }
    pub fn m_hi(&self) -> f64 {
        self.m_hi
    }

    pub fn is_singleton(&self) -> bool {
        self.m_lo == self.m_hi
    }
}

/// Posterior interval at `(t, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorPair {
    pub m_lo_t: f64,
    pub m_hi_t: f64,
    pub t: f64,
    pub z: f64,
}

/// Payoff table `u(a_i, theta_j)` and the payoff of the default action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payoffs {
    pub u00: f64,
    pub u01: f64,
    pub u10: f64,
    pub u11: f64,
    pub u2: f64,
}

const PAYOFF_EQ_TOL: f64 = 1e-12;

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= PAYOFF_EQ_TOL * (1.0 + a.abs().max(b.abs()))
}

impl Payoffs {
    pub fn new(u00: f64, u01: f64, u10: f64, u11: f64, u2: f64) -> Result<Self> {
        if ![u00, u01, u10, u11, u2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("payoffs must be finite".into()));
        }
        if !nearly_equal(u00, u11) {
            return Err(Error::InvalidParams(format!(
                "the correct action must pay the same under both parameters: u00 = {u00}, u11 = {u11}"
            )));
        }
        if u01 >= u00 || u10 >= u00 {
            return Err(Error::InvalidParams(format!(
                "wrong actions must pay strictly less: u00 = {u00}, u01 = {u01}, u10 = {u10}"
            )));
        }
        if u2 >= u00 {
            return Err(Error::InvalidParams(format!(
                "default payoff u2 = {u2} must be below u00 = {u00}"
            )));
        }
        Ok(Self {
            u00,
            u01,
            u10,
            u11,
            u2,
        })
    }

    pub fn payoff_symmetry(&self) -> bool {
        nearly_equal(self.u01, self.u10)
    }

    pub fn no_risky_option(&self) -> bool {
        self.u2 <= self.u10.min(self.u01)
    }

    /// Worst-case expected payoff of `a0` when the upper posterior is `m_hi`.
    pub fn a0_payoff(&self, m_hi: f64) -> f64 {
        (self.u00 - self.u01) * (1.0 - m_hi) + self.u01
    }

    /// Worst-case expected payoff of `a1` when the lower posterior is `m_lo`.
    pub fn a1_payoff(&self, m_lo: f64) -> f64 {
        (self.u11 - self.u10) * m_lo + self.u10
    }

    /// Level of `u2` below which the default action is never strictly optimal
    /// on stopping.
    pub fn u2_star(&self) -> f64 {
        (self.u11 * self.u00 - self.u10 * self.u01) / (self.u00 + self.u11 - self.u01 - self.u10)
    }

    pub fn with_u2(&self, u2: f64) -> Result<Self> {
        Self::new(self.u00, self.u01, self.u10, self.u11, u2)
    }
}

/// The pair of posteriors at which `a0` and `a1` are indifferent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndifferencePoint {
    pub pi_lo: f64,
    pub pi_hi: f64,
}

/// Log of the likelihood ratio of `theta1` against `theta0` after observing
/// `Z_t = z`.
pub fn log_phi(t: f64, z: f64, p: &ModelParams) -> f64 {
    let s2 = p.sigma * p.sigma;
    (p.theta1 - p.theta0) * z / s2 - (p.theta1 * p.theta1 - p.theta0 * p.theta0) * t / (2.0 * s2)
}

pub fn phi(t: f64, z: f64, p: &ModelParams) -> f64 {
    log_phi(t, z, p).exp()
}

/// Bayesian posterior on `theta1` for prior `m0`.
pub fn posterior(m0: f64, t: f64, z: f64, p: &ModelParams) -> Result<f64> {
    let m0 = check_open("m0", m0)?;
    Ok(sigmoid(logit(m0) + log_phi(t, z, p)))
}

pub fn posterior_pair(prior: &PriorInterval, t: f64, z: f64, p: &ModelParams) -> PosteriorPair {
    let lp = log_phi(t, z, p);
    PosteriorPair {
        m_lo_t: sigmoid(logit(prior.m_lo) + lp),
        m_hi_t: sigmoid(logit(prior.m_hi) + lp),
        t,
        z,
    }
}

/// Signal levels at which each extreme posterior reaches a given level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPair {
    /// Signal at which the posterior of the upper prior equals `r`.
    pub from_m_hi: f64,
    /// Signal at which the posterior of the lower prior equals `r`.
    pub from_m_lo: f64,
}

/// Signal level at which the posterior started from `m0` equals `r`.
pub(crate) fn boundary_from_log_odds(x_r: f64, x_m0: f64, t: f64, p: &ModelParams) -> f64 {
    p.mid_drift() * t + (x_r - x_m0) / p.signal_gain()
}

/// Inverts the posterior maps: returns the signal levels at which the
/// posteriors of the upper and lower prior equal `r` at time `t`.
pub fn boundary_maps(r: f64, t: f64, prior: &PriorInterval, p: &ModelParams) -> Result<BoundaryPair> {
    let x = logit(check_open("r", r)?);
    Ok(BoundaryPair {
        from_m_hi: boundary_from_log_odds(x, logit(prior.m_hi), t, p),
        from_m_lo: boundary_from_log_odds(x, logit(prior.m_lo), t, p),
    })
}

/// Finds the posterior pair, lying on a single signal path, at which the
/// worst-case payoffs of `a0` and `a1` coincide.
pub fn indifference(prior: &PriorInterval, payoffs: &Payoffs) -> Result<IndifferencePoint> {
    // Parametrise by the log-odds of the upper posterior; the lower one sits at
    // a fixed log-odds offset determined by the prior interval.
    let offset = logit(prior.m_lo) - logit(prior.m_hi);
    let gap = |x: f64| payoffs.a1_payoff(sigmoid(x + offset)) - payoffs.a0_payoff(sigmoid(x));
    let slope = |x: f64| {
        let lo = sigmoid(x + offset);
        let hi = sigmoid(x);
        (payoffs.u11 - payoffs.u10) * lo * (1.0 - lo) + (payoffs.u00 - payoffs.u01) * hi * (1.0 - hi)
    };
    let limit = 80.0 + offset.abs();
    let x = root::newton_bracketed(
        "indifference point",
        |x| (gap(x), slope(x)),
        -limit,
        limit,
        Tolerance {
            x_abs: 1e-14,
            max_iter: 400,
        },
    )?;
    Ok(IndifferencePoint {
        pi_lo: sigmoid(x + offset),
        pi_hi: sigmoid(x),
    })
}

/// Drift of the worst-case measure: the posterior mean of `theta` under the
/// upper prior below the indifference path, under the lower prior on and
/// above it.
pub fn worst_case_drift(t: f64, z: f64, prior: &PriorInterval, pi: &IndifferencePoint, p: &ModelParams) -> f64 {
    let pair = posterior_pair(prior, t, z, p);
    let m = if z < z_tilde(t, prior, pi, p) { pair.m_hi_t } else { pair.m_lo_t };
    p.theta0 + (p.theta1 - p.theta0) * m
}

/// Signal path along which `a0` and `a1` stay indifferent.
pub fn z_tilde(t: f64, prior: &PriorInterval, pi: &IndifferencePoint, p: &ModelParams) -> f64 {
    boundary_from_log_odds(logit(pi.pi_hi), logit(prior.m_hi), t, p)
}
