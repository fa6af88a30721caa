//! Executable stopping rule.
//!
//! The rule can be read in two equivalent ways: through the extreme
//! posteriors `(m_lo_t, m_hi_t)` compared with the solved thresholds, or
//! through the signal `z` compared with straight lines in `(t, z)`. The
//! second form is what the simulator uses on its hot path.

use serde::Serialize;

use crate::error::Result;
use crate::math::{self, logit};
use crate::problem::Problem;
use crate::thresholds::{self, Regime, Region, Thresholds};
use crate::value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    A0,
    A1,
    A2,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::A0 => "a0",
            Action::A1 => "a1",
            Action::A2 => "a2",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Action::A0 => 0,
            Action::A1 => 1,
            Action::A2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Continue,
    Stop(Action),
}

/// Boundary lines `z = slope * t + offset`; all share the same slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalRule {
    pub slope: f64,
    /// Stop with `a0` at or below this offset.
    pub a0: f64,
    /// Stop with `a1` at or above this offset.
    pub a1: f64,
    /// Closed band `[lo, hi]` where `a2` is chosen, if any.
    pub a2: Option<(f64, f64)>,
    /// Offset of the indifference path.
    pub switch: f64,
}

impl SignalRule {
    #[inline]
    pub fn decide(&self, t: f64, z: f64) -> Decision {
        let u = z - self.slope * t;
        if u <= self.a0 {
            Decision::Stop(Action::A0)
        } else if u >= self.a1 {
            Decision::Stop(Action::A1)
        } else {
            match self.a2 {
                Some((lo, hi)) if u >= lo && u <= hi => Decision::Stop(Action::A2),
                _ => Decision::Continue,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingPolicy {
    problem: Problem,
    thresholds: Thresholds,
    rule: SignalRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Span {
    /// `-inf` for the first span.
    pub from: f64,
    /// `+inf` for the last span.
    pub to: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub t: f64,
    pub breakpoints: Vec<f64>,
    pub spans: Vec<Span>,
}

impl StoppingPolicy {
    pub fn new(problem: &Problem, thresholds: &Thresholds) -> Self {
        let p = &problem.params;
        let x_hi0 = logit(problem.prior.m_hi());
        let x_lo0 = logit(problem.prior.m_lo());
        let via_hi = |r: f64| math::boundary_from_log_odds(logit(r), x_hi0, 0.0, p);
        let via_lo = |r: f64| math::boundary_from_log_odds(logit(r), x_lo0, 0.0, p);
        let switch = via_hi(thresholds.pi.pi_hi);
        let rule = match thresholds.regime {
            Regime::AI(r) => SignalRule {
                slope: p.mid_drift(),
                a0: via_hi(r.r2_left),
                a1: via_lo(r.r2_right),
                a2: Some((via_hi(r.r1_left), via_lo(r.r1_right))),
                switch,
            },
            Regime::AII(r) | Regime::B(r) => SignalRule {
                slope: p.mid_drift(),
                a0: via_hi(r.r_left),
                a1: via_lo(r.r_right),
                a2: None,
                switch,
            },
        };
        Self {
            problem: *problem,
            thresholds: *thresholds,
            rule,
        }
    }

    pub fn solve(problem: &Problem) -> Result<Self> {
        Ok(Self::new(problem, &thresholds::classify(problem)?))
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn signal_rule(&self) -> &SignalRule {
        &self.rule
    }

    /// Decision from the extreme posteriors.
    pub fn decide_posterior(&self, m_lo: f64, m_hi: f64) -> Decision {
        match self.thresholds.regime.region(m_lo, m_hi, &self.thresholds.pi) {
            Region::StopA0 => Decision::Stop(Action::A0),
            Region::StopA1 => Decision::Stop(Action::A1),
            Region::StopA2 => Decision::Stop(Action::A2),
            Region::ContinueLeft | Region::ContinueRight => Decision::Continue,
        }
    }

    pub fn decide(&self, t: f64, z: f64) -> Decision {
        let pair = self.problem.posterior_pair(t, z);
        self.decide_posterior(pair.m_lo_t, pair.m_hi_t)
    }

    /// Same rule through the signal lines. Agrees with [`decide`](Self::decide)
    /// except within rounding of a boundary.
    #[inline]
    pub fn decide_signal(&self, t: f64, z: f64) -> Decision {
        self.rule.decide(t, z)
    }

    pub fn immediate_payoff(&self, t: f64, z: f64) -> f64 {
        let pair = self.problem.posterior_pair(t, z);
        value::immediate_payoff(&self.problem, pair.m_lo_t, pair.m_hi_t)
    }

    /// Worst-case payoff of taking `action` at `(t, z)`.
    pub fn action_payoff(&self, action: Action, t: f64, z: f64) -> f64 {
        let pair = self.problem.posterior_pair(t, z);
        let u = &self.problem.payoffs;
        match action {
            Action::A0 => u.a0_payoff(pair.m_hi_t),
            Action::A1 => u.a1_payoff(pair.m_lo_t),
            Action::A2 => u.u2,
        }
    }

    /// Breakpoints in `z` at time `t` with the decision on each span.
    pub fn region_report(&self, t: f64) -> RegionReport {
        let shift = self.rule.slope * t;
        let mut cuts: Vec<(f64, Decision)> = vec![(self.rule.a0 + shift, Decision::Continue)];
        if let Some((lo, hi)) = self.rule.a2 {
            cuts.push((lo + shift, Decision::Stop(Action::A2)));
            cuts.push((hi + shift, Decision::Continue));
        }
        cuts.push((self.rule.a1 + shift, Decision::Stop(Action::A1)));
        let breakpoints: Vec<f64> = cuts.iter().map(|c| c.0).collect();
        let mut spans = vec![Span {
            from: f64::NEG_INFINITY,
            to: breakpoints[0],
            decision: Decision::Stop(Action::A0),
        }];
        for (i, &(from, decision)) in cuts.iter().enumerate() {
            let to = breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY);
            spans.push(Span { from, to, decision });
        }
        spans.retain(|s| s.to > s.from || s.decision != Decision::Continue);
        RegionReport { t, breakpoints, spans }
    }
}
