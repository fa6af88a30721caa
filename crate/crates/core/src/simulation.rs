//! Monte Carlo of the signal process under a fixed drift or under the
//! worst-case measure, stopped by a [`StoppingPolicy`].
//!
//! Paths are simulated by Euler steps on `Z`. Since every stopping boundary
//! is a straight line in `(t, z)` and the drift is constant within a step,
//! the probability that the continuous path touched a boundary between two
//! grid points is known exactly (`exp(-2 d0 d1 / (sigma^2 dt))` for
//! distances `d0`, `d1` to the line). With `bridge` enabled that crossing is
//! sampled, which removes the first-order overshoot bias of grid-only
//! monitoring; with it disabled only grid points are checked.
//!
//! Each path owns a ChaCha stream selected by its index, so results do not
//! depend on scheduling and sequential and parallel runs agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{logit, sigmoid};
use crate::policy::{Action, Decision, SignalRule, StoppingPolicy};
use crate::problem::{Family, Problem};
use crate::thresholds;

/// Crossing probabilities below `exp(-BRIDGE_CUTOFF)` are treated as zero.
const BRIDGE_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Measure {
    /// Constant drift `theta`.
    TrueTheta(f64),
    /// Posterior-mean drift of the upper prior below the indifference path
    /// and of the lower prior on or above it.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub measure: Measure,
    pub dt: f64,
    /// Horizon cap; `None` picks a default from the problem.
    pub t_max: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Sample boundary crossings between grid points.
    pub bridge: bool,
}

impl SimConfig {
    pub fn new(measure: Measure, n_paths: usize, seed: u64) -> Self {
        Self {
            measure,
            dt: 1e-4,
            t_max: None,
            n_paths,
            seed,
            bridge: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be at least 1".into()));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) {
                return Err(Error::InvalidParams(format!("t_max must be positive, got {t}")));
            }
        }
        if let Measure::TrueTheta(theta) = self.measure {
            if !theta.is_finite() {
                return Err(Error::InvalidParams(format!("theta must be finite, got {theta}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathOutcome {
    pub tau: f64,
    /// `None` when censored.
    pub action: Option<Action>,
}

impl PathOutcome {
    pub fn censored(&self) -> bool {
        self.action.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub z: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimStats {
    pub n_paths: usize,
    /// Over uncensored paths.
    pub mean_tau: f64,
    pub se_tau: f64,
    /// Frequencies of `a0`, `a1`, `a2` over uncensored paths.
    pub action_frequencies: [f64; 3],
    /// Share of paths stopping with the action that is right under the true
    /// drift; defined for a fixed drift off the midpoint of the two drifts.
    pub correct_rate: Option<f64>,
    pub se_correct: Option<f64>,
    pub censored_count: usize,
    pub t_max: f64,
    pub dt: f64,
}

/// Closed-form sample-length and accuracy for the two-urn problem with a
/// constant boundary `|z| = z_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticStats {
    pub z_bar: f64,
    pub mean_tau: f64,
    /// `None` at `theta = 0`, where no bet is right.
    pub correct_prob: Option<f64>,
}

/// Expected stopping time and probability of the right bet when the drift
/// is `theta` and the urn problem has ambiguity `eps`.
pub fn analytic_stats(alpha: f64, eps: f64, c: f64, sigma: f64, theta: f64) -> Result<AnalyticStats> {
    let params = crate::math::ModelParams::new(-alpha, alpha, sigma, c)?;
    let r_bar = thresholds::solve_rbar(eps, &params)?;
    let z_bar = thresholds::ellsberg_zbar(eps, r_bar, &params)?;
    let s2 = sigma * sigma;
    let x = theta * z_bar / s2;
    let ratio = if x.abs() < 1e-8 { 1.0 - x * x / 3.0 } else { x.tanh() / x };
    let correct_prob = (theta != 0.0).then(|| 1.0 / (1.0 + (-2.0 * theta.abs() * z_bar / s2).exp()));
    Ok(AnalyticStats {
        z_bar,
        mean_tau: z_bar * z_bar / s2 * ratio,
        correct_prob,
    })
}

/// Precomputed per-run state shared by all paths.
#[derive(Debug, Clone, Copy)]
struct Engine {
    rule: SignalRule,
    dt: f64,
    sqrt_dt: f64,
    t_max: f64,
    max_steps: u64,
    sigma: f64,
    bridge_scale: f64,
    bridge: bool,
    drift: DriftModel,
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
enum DriftModel {
    Constant(f64),
    WorstCase {
        theta0: f64,
        spread: f64,
        gain: f64,
        x_lo0: f64,
        x_hi0: f64,
    },
}

impl DriftModel {
    /// Drift given the boundary-frame coordinate `u = z - slope * t`.
    #[inline]
    fn at(&self, u: f64, switch: f64) -> f64 {
        match *self {
            DriftModel::Constant(theta) => theta,
            DriftModel::WorstCase {
                theta0,
                spread,
                gain,
                x_lo0,
                x_hi0,
            } => {
                let x0 = if u < switch { x_hi0 } else { x_lo0 };
                theta0 + spread * sigmoid(x0 + gain * u)
            }
        }
    }
}

fn default_t_max(problem: &Problem, rule: &SignalRule, measure: Measure) -> f64 {
    if let (Family::Ellsberg { alpha, eps }, Measure::TrueTheta(theta)) = (problem.family, measure) {
        let p = &problem.params;
        if let Ok(a) = analytic_stats(alpha, eps, p.c(), p.sigma(), theta) {
            return 50.0 * a.mean_tau;
        }
    }
    let half = 0.5 * (rule.a1 - rule.a0);
    50.0 * (half / problem.params.sigma()).powi(2)
}

impl Engine {
    fn new(cfg: &SimConfig, policy: &StoppingPolicy) -> Result<Self> {
        cfg.validate()?;
        let problem = policy.problem();
        let p = &problem.params;
        let rule = *policy.signal_rule();
        let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(problem, &rule, cfg.measure));
        let drift = match cfg.measure {
            Measure::TrueTheta(theta) => DriftModel::Constant(theta),
            Measure::WorstCase => DriftModel::WorstCase {
                theta0: p.theta0(),
                spread: p.theta1() - p.theta0(),
                gain: p.signal_gain(),
                x_lo0: logit(problem.prior.m_lo()),
                x_hi0: logit(problem.prior.m_hi()),
            },
        };
        Ok(Self {
            rule,
            dt: cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
            t_max,
            max_steps: (t_max / cfg.dt).ceil() as u64,
            sigma: p.sigma(),
            bridge_scale: 2.0 / (p.sigma() * p.sigma() * cfg.dt),
            bridge: cfg.bridge,
            drift,
            seed: cfg.seed,
        })
    }

    fn rng(&self, path: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path);
        rng
    }

    /// Whether the continuous path crossed the line at offset `b` between
    /// two grid points on the same side of it.
    #[inline]
    fn bridged(&self, rng: &mut ChaCha8Rng, d0: f64, d1: f64) -> bool {
        let exponent = self.bridge_scale * d0 * d1;
        exponent < BRIDGE_CUTOFF && rng.random::<f64>() < (-exponent).exp()
    }

    /// Action triggered by a crossing between `u0` and `u1`, both in the
    /// continuation region.
    #[inline]
    fn bridge_check(&self, rng: &mut ChaCha8Rng, u0: f64, u1: f64) -> Option<Action> {
        let r = &self.rule;
        match r.a2 {
            Some((lo, _)) if u0 < lo => {
                if self.bridged(rng, u0 - r.a0, u1 - r.a0) {
                    Some(Action::A0)
                } else if self.bridged(rng, lo - u0, lo - u1) {
                    Some(Action::A2)
                } else {
                    None
                }
            }
            Some((_, hi)) => {
                if self.bridged(rng, u0 - hi, u1 - hi) {
                    Some(Action::A2)
                } else if self.bridged(rng, r.a1 - u0, r.a1 - u1) {
                    Some(Action::A1)
                } else {
                    None
                }
            }
            None => {
                if self.bridged(rng, u0 - r.a0, u1 - r.a0) {
                    Some(Action::A0)
                } else if self.bridged(rng, r.a1 - u0, r.a1 - u1) {
                    Some(Action::A1)
                } else {
                    None
                }
            }
        }
    }

    /// Runs one path in the boundary frame `u = z - slope * t`, where the
    /// stopping lines are constant.
    fn run(&self, path: u64, mut trace: Option<(&mut Vec<TracePoint>, usize, &StoppingPolicy)>) -> PathOutcome {
        let slope = self.rule.slope;
        let record = |trace: &mut Option<(&mut Vec<TracePoint>, usize, &StoppingPolicy)>, n: u64, t: f64, u: f64, d: Decision| {
            if let Some((out, stride, policy)) = trace {
                if n.is_multiple_of(*stride as u64) || d != Decision::Continue {
                    let z = u + slope * t;
                    let pair = policy.problem().posterior_pair(t, z);
                    out.push(TracePoint {
                        t,
                        z,
                        m_lo: pair.m_lo_t,
                        m_hi: pair.m_hi_t,
                        decision: d,
                    });
                }
            }
        };
        let d = self.rule.decide(0.0, 0.0);
        record(&mut trace, 0, 0.0, 0.0, d);
        if let Decision::Stop(a) = d {
            return PathOutcome {
                tau: 0.0,
                action: Some(a),
            };
        }
        let mut rng = self.rng(path);
        let mut u = 0.0_f64;
        for n in 1..=self.max_steps {
            let drift = self.drift.at(u, self.rule.switch) - slope;
            let dw: f64 = rng.sample(StandardNormal);
            let u_next = u + drift * self.dt + self.sigma * self.sqrt_dt * dw;
            let t = n as f64 * self.dt;
            let d = self.rule.decide(0.0, u_next);
            record(&mut trace, n, t, u_next, d);
            if let Decision::Stop(a) = d {
                return PathOutcome { tau: t, action: Some(a) };
            }
            if self.bridge {
                if let Some(a) = self.bridge_check(&mut rng, u, u_next) {
                    record(&mut trace, 0, t, u_next, Decision::Stop(a));
                    return PathOutcome { tau: t, action: Some(a) };
                }
            }
            u = u_next;
        }
        PathOutcome {
            tau: self.max_steps as f64 * self.dt,
            action: None,
        }
    }
}

/// Simulates path number `path`. With `trace_stride = Some(k)` every k-th
/// grid point and the stopping point are recorded.
pub fn simulate_path(
    cfg: &SimConfig,
    policy: &StoppingPolicy,
    path: u64,
    trace_stride: Option<usize>,
) -> Result<(PathOutcome, Option<Vec<TracePoint>>)> {
    let engine = Engine::new(cfg, policy)?;
    match trace_stride {
        Some(stride) => {
            let mut points = Vec::new();
            let out = engine.run(path, Some((&mut points, stride.max(1), policy)));
            Ok((out, Some(points)))
        }
        None => Ok((engine.run(path, None), None)),
    }
}

/// All path outcomes in path order.
pub fn simulate_paths(cfg: &SimConfig, policy: &StoppingPolicy, exec: Execution) -> Result<Vec<PathOutcome>> {
    let engine = Engine::new(cfg, policy)?;
    let n = cfg.n_paths as u64;
    Ok(match exec {
        Execution::Sequential => (0..n).map(|i| engine.run(i, None)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(|i| engine.run(i, None)).collect()
        }
    })
}

pub fn estimate(cfg: &SimConfig, policy: &StoppingPolicy) -> Result<SimStats> {
    estimate_with(cfg, policy, Execution::default())
}

pub fn estimate_with(cfg: &SimConfig, policy: &StoppingPolicy, exec: Execution) -> Result<SimStats> {
    let outcomes = simulate_paths(cfg, policy, exec)?;
    let engine = Engine::new(cfg, policy)?;
    let p = &policy.problem().params;
    let right_action = match cfg.measure {
        Measure::TrueTheta(theta) if theta > p.mid_drift() => Some(Action::A1),
        Measure::TrueTheta(theta) if theta < p.mid_drift() => Some(Action::A0),
        _ => None,
    };

    // Welford in path order keeps the result independent of execution mode.
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut counts = [0usize; 3];
    let mut correct = 0usize;
    for o in &outcomes {
        let Some(a) = o.action else { continue };
        n += 1;
        let delta = o.tau - mean;
        mean += delta / n as f64;
        m2 += delta * (o.tau - mean);
        counts[a.index()] += 1;
        if Some(a) == right_action {
            correct += 1;
        }
    }
    let censored_count = outcomes.len() - n;
    if censored_count > 0 {
        log::warn!(
            "{censored_count} of {} paths reached t_max = {} without stopping",
            outcomes.len(),
            engine.t_max
        );
    }
    let nf = n as f64;
    let se_tau = if n > 1 { (m2 / (nf - 1.0) / nf).sqrt() } else { f64::NAN };
    let freq = |k: usize| if n > 0 { counts[k] as f64 / nf } else { f64::NAN };
    let (correct_rate, se_correct) = match right_action {
        Some(_) if n > 0 => {
            let q = correct as f64 / nf;
            let se = if n > 1 { (q * (1.0 - q) / (nf - 1.0)).sqrt() } else { f64::NAN };
            (Some(q), Some(se))
        }
        _ => (None, None),
    };
    Ok(SimStats {
        n_paths: outcomes.len(),
        mean_tau: if n > 0 { mean } else { f64::NAN },
        se_tau,
        action_frequencies: [freq(0), freq(1), freq(2)],
        correct_rate,
        se_correct,
        censored_count,
        t_max: engine.t_max,
        dt: engine.dt,
    })
}
