//! A fully specified learning problem: signal model, prior interval, payoffs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{self, ModelParams, Payoffs, PosteriorPair, PriorInterval};

/// Which shorthand, if any, produced the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    General,
    /// Two-urn betting problem with bias `±alpha` and prior interval
    /// `[(1 - eps)/2, (1 + eps)/2]` on the positive bias.
    Ellsberg { alpha: f64, eps: f64 },
    /// Test of `theta = 0` against `theta = beta` with loss `a` for a false
    /// acceptance of `H0` and `b` for a false acceptance of `H1`.
    HypothesisTest { beta: f64, a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Problem {
    pub params: ModelParams,
    pub prior: PriorInterval,
    pub payoffs: Payoffs,
    pub family: Family,
}

impl Problem {
    pub fn new(params: ModelParams, prior: PriorInterval, payoffs: Payoffs) -> Self {
        Self {
            params,
            prior,
            payoffs,
            family: Family::General,
        }
    }

    /// Bets on a risky urn (`a2`, pays 1/2) or on red (`a1`) / blue (`a0`)
    /// from an ambiguous urn whose red proportion is `1/2 ± alpha`.
    ///
    /// A wrong-colour bet wins with probability `1/2 - alpha`.
    pub fn ellsberg(alpha: f64, eps: f64, c: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParams(format!("eps must lie in [0, 1), got {eps}")));
        }
        let params = ModelParams::new(-alpha, alpha, sigma, c)?;
        let prior = PriorInterval::new(0.5 * (1.0 - eps), 0.5 * (1.0 + eps))?;
        let win = 0.5 + alpha;
        let lose = 0.5 - alpha;
        let payoffs = Payoffs::new(win, lose, lose, win, 0.5)?;
        Ok(Self {
            params,
            prior,
            payoffs,
            family: Family::Ellsberg { alpha, eps },
        })
    }

    /// Sequential test of `H0: theta = 0` against `H1: theta = beta`.
    ///
    /// Payoffs are `a + b` for a correct decision, `b` for accepting `H0`
    /// when `H1` holds and `a` for accepting `H1` when `H0` holds. There is no
    /// default action; `u2 = 0` keeps it dominated.
    pub fn hypothesis_test(beta: f64, a: f64, b: f64, m_lo: f64, m_hi: f64, c: f64, sigma: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParams(format!("a and b must be positive, got {a}, {b}")));
        }
        let params = ModelParams::new(0.0, beta, sigma, c)?;
        let prior = PriorInterval::new(m_lo, m_hi)?;
        let payoffs = Payoffs::new(a + b, b, a, a + b, 0.0)?;
        Ok(Self {
            params,
            prior,
            payoffs,
            family: Family::HypothesisTest { beta, a, b },
        })
    }

    pub fn posterior_pair(&self, t: f64, z: f64) -> PosteriorPair {
        math::posterior_pair(&self.prior, t, z, &self.params)
    }

    /// Replaces the flow cost and keeps everything else.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        Ok(Self {
            params: self.params.with_c(c)?,
            ..*self
        })
    }

    /// Replaces the default payoff. The result is a general problem.
    pub fn with_u2(&self, u2: f64) -> Result<Self> {
        Ok(Self {
            payoffs: self.payoffs.with_u2(u2)?,
            family: Family::General,
            ..*self
        })
    }
}
