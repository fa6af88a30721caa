//! Critical posterior levels that delimit the stopping regions, and the
//! classification of a problem into one of the solution regimes.
//!
//! Every two-equation system here is reduced to a single monotone equation:
//! one unknown parametrises the other through the `ell` difference equation,
//! and the remaining equation is solved by a bracketed root search. The
//! asymmetric two-action system is solved by shooting: a candidate lower
//! threshold fixes the left value branch, the branch is carried across the
//! indifference point, and the candidate is bisected until the right branch
//! touches the payoff line of `a1` tangentially.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{self, log_odds, logit, sigmoid, IndifferencePoint, ModelParams};
use crate::problem::Problem;
use crate::root::{self, Tolerance};

/// Snapping tolerance for `u2 == u2**`, where the flat region degenerates to
/// the indifference curve itself.
const U2_TIE: f64 = 1e-12;

const SHOOT_RESIDUAL: f64 = 1e-10;
const SHOOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// The time-0 posterior interval already lies in a stopping region.
    NoLearn,
    /// Payoff symmetry with a default payoff high enough that `a2` is chosen
    /// on an intermediate band of signals.
    CaseAI,
    /// Payoff symmetry, default action never chosen.
    CaseAII,
    /// Default action dominated; two-action robust sequential test.
    CaseB,
}

impl CaseTag {
    pub fn name(&self) -> &'static str {
        match self {
            CaseTag::NoLearn => "no_learn",
            CaseTag::CaseAI => "a.i",
            CaseTag::CaseAII => "a.ii",
            CaseTag::CaseB => "b",
        }
    }
}

/// Thresholds for the regime with an `a2` stopping band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatBandThresholds {
    /// Lower posterior at which `a2` gives way to learning on the right.
    pub r1_right: f64,
    /// Lower posterior at which `a1` is chosen.
    pub r2_right: f64,
    /// Upper posterior at which `a2` gives way to learning on the left.
    pub r1_left: f64,
    /// Upper posterior at which `a0` is chosen.
    pub r2_left: f64,
}

/// Thresholds for the two-boundary regimes: stop with `a0` once the upper
/// posterior falls to `r_left`, with `a1` once the lower posterior reaches
/// `r_right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSidedThresholds {
    pub r_left: f64,
    pub r_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime")]
pub enum Regime {
    AI(FlatBandThresholds),
    AII(TwoSidedThresholds),
    B(TwoSidedThresholds),
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::AI(_) => "a.i",
            Regime::AII(_) => "a.ii",
            Regime::B(_) => "b",
        }
    }

    /// Locates a posterior pair. Stopping regions are closed; `a0` and `a1`
    /// take precedence over `a2` where regions touch.
    pub fn region(&self, m_lo: f64, m_hi: f64, pi: &IndifferencePoint) -> Region {
        match self {
            Regime::AII(t) | Regime::B(t) => {
                if m_hi <= t.r_left {
                    Region::StopA0
                } else if m_lo >= t.r_right {
                    Region::StopA1
                } else if m_hi < pi.pi_hi {
                    Region::ContinueLeft
                } else {
                    Region::ContinueRight
                }
            }
            Regime::AI(r) => {
                if m_hi <= r.r2_left {
                    Region::StopA0
                } else if m_lo >= r.r2_right {
                    Region::StopA1
                } else if m_hi >= r.r1_left && m_lo <= r.r1_right {
                    Region::StopA2
                } else if m_hi < r.r1_left {
                    Region::ContinueLeft
                } else {
                    Region::ContinueRight
                }
            }
        }
    }
}

/// Where a posterior pair sits relative to the solved thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    StopA0,
    StopA1,
    StopA2,
    /// Continuation, valued through the upper posterior.
    ContinueLeft,
    /// Continuation, valued through the lower posterior.
    ContinueRight,
}

impl Region {
    pub fn is_stop(&self) -> bool {
        matches!(self, Region::StopA0 | Region::StopA1 | Region::StopA2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub tag: CaseTag,
    pub regime: Regime,
    pub pi: IndifferencePoint,
    pub u2_star: f64,
    pub u2_dstar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesianThresholds {
    pub r_left: f64,
    pub r_right: f64,
}

// ---------------------------------------------------------------------------
// Two-urn problem
// ---------------------------------------------------------------------------

fn ellsberg_alpha(p: &ModelParams) -> Result<f64> {
    let alpha = p.theta1();
    let sym = (p.theta0() + alpha).abs() <= 1e-14 * alpha.abs();
    if !sym || alpha <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "two-urn formulas need theta1 = -theta0 > 0, got ({}, {})",
            p.theta0(),
            p.theta1()
        )));
    }
    Ok(alpha)
}

/// `2 alpha^3 / (c sigma^2)`.
pub fn ellsberg_target(p: &ModelParams) -> Result<f64> {
    let alpha = ellsberg_alpha(p)?;
    Ok(2.0 * alpha.powi(3) / (p.c() * p.sigma() * p.sigma()))
}

/// Unique `r_hat` in `(1/2, 1)` with `ell(r_hat) = 2 alpha^3 / (c sigma^2)`.
/// Learning is rejected once `(1 + eps)/2 >= r_hat`.
pub fn solve_rhat(p: &ModelParams) -> Result<f64> {
    math::ell_inverse(ellsberg_target(p)?)
}

/// Upper stopping posterior when some learning is optimal.
pub fn solve_rbar(eps: f64, p: &ModelParams) -> Result<f64> {
    let r_hat = solve_rhat(p)?;
    let m_hi = 0.5 * (1.0 + eps);
    if m_hi >= r_hat {
        return Err(Error::Branch(format!(
            "(1 + eps)/2 = {m_hi} >= r_hat = {r_hat}: learning is rejected"
        )));
    }
    let target = 2.0 * ellsberg_target(p)? - math::ell(m_hi)?;
    math::ell_inverse(target)
}

/// Half-width of the symmetric continuation interval in signal space.
pub fn ellsberg_zbar(eps: f64, r_bar: f64, p: &ModelParams) -> Result<f64> {
    let alpha = ellsberg_alpha(p)?;
    Ok(p.sigma() * p.sigma() / (2.0 * alpha) * (((1.0 + eps) / (1.0 - eps)).ln() + logit(r_bar)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllsbergSolution {
    pub r_hat: f64,
    /// `2 r_hat - 1`: largest ambiguity at which learning still happens.
    pub cutoff: f64,
    pub r_bar: Option<f64>,
    pub z_bar: Option<f64>,
}

pub fn solve_ellsberg(eps: f64, p: &ModelParams) -> Result<EllsbergSolution> {
    let r_hat = solve_rhat(p)?;
    let (r_bar, z_bar) = if 0.5 * (1.0 + eps) < r_hat {
        let r_bar = solve_rbar(eps, p)?;
        (Some(r_bar), Some(ellsberg_zbar(eps, r_bar, p)?))
    } else {
        (None, None)
    };
    Ok(EllsbergSolution {
        r_hat,
        cutoff: 2.0 * r_hat - 1.0,
        r_bar,
        z_bar,
    })
}

// ---------------------------------------------------------------------------
// General regimes
// ---------------------------------------------------------------------------

/// Solves `ell(r2) - ell(r1) = delta`, `ell_tilde(r2) - ell_tilde(r1) = k`,
/// returning log-odds `(x1, x2)`.
///
/// Along the first equation `d/dx1 [ell_tilde(r2) - ell_tilde(r1)] =
/// (r2 - r1) / (r1 (1 - r1))`, so the second is monotone in `x1` and its
/// range is the open interval between 0 and `delta`.
fn solve_paired(what: &'static str, delta: f64, k: f64) -> Result<(f64, f64)> {
    let inside = if delta > 0.0 { k > 0.0 && k < delta } else { k < 0.0 && k > delta };
    if !inside {
        return Err(Error::Existence(format!(
            "{what}: ell_tilde gap {k} must lie strictly between 0 and {delta}"
        )));
    }
    let residual = |x1: f64| -> Result<(f64, f64)> {
        let d = log_odds::ell_shift(x1, delta)?;
        let f = log_odds::ell_tilde_diff(x1, d) - k;
        let r1 = sigmoid(x1);
        let r2 = sigmoid(x1 + d);
        Ok((f, (r2 - r1) / (r1 * (1.0 - r1))))
    };
    let mut failure = None;
    let mut value = |x: f64| match residual(x) {
        Ok(v) => v.0,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let (lo, hi) = root::expand_bracket(what, &mut value, 0.0, 1.0, 60.0)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let x1 = root::newton_bracketed(
        what,
        |x| residual(x).unwrap_or((f64::NAN, f64::NAN)),
        lo,
        hi,
        Tolerance {
            x_abs: 1e-13,
            max_iter: 400,
        },
    )?;
    let d = log_odds::ell_shift(x1, delta)?;
    Ok((x1, x1 + d))
}

/// Thresholds of the regime where neither the default action nor a
/// switching point is involved: the continuation value has zero slope at the
/// indifference point on each side.
pub fn solve_case_aii(problem: &Problem, pi: &IndifferencePoint) -> Result<TwoSidedThresholds> {
    let u = &problem.payoffs;
    let c_hat = problem.params.c_hat();
    let x_lo = logit(pi.pi_lo);
    let x_hi = logit(pi.pi_hi);
    let d_right = log_odds::ell_shift(x_lo, (u.u11 - u.u10) / c_hat)?;
    let d_left = log_odds::ell_shift(x_hi, -(u.u00 - u.u01) / c_hat)?;
    Ok(TwoSidedThresholds {
        r_left: sigmoid(x_hi + d_left),
        r_right: sigmoid(x_lo + d_right),
    })
}

/// `u2*` and `u2**`.
///
/// `u2**` is the continuation value at the indifference point in the regime
/// without a default band; `aii` must come from [`solve_case_aii`].
pub fn critical_u2(problem: &Problem, pi: &IndifferencePoint, aii: &TwoSidedThresholds) -> (f64, f64) {
    let u = &problem.payoffs;
    let c_hat = problem.params.c_hat();
    let x_hi = logit(pi.pi_hi);
    let x_l = logit(aii.r_left);
    let curvature_gap = log_odds::curvature_diff(x_hi, x_l - x_hi);
    let u2_dstar = 0.5 * (u.u00 + u.u01) + 0.5 * c_hat * curvature_gap;
    (u.u2_star(), u2_dstar)
}

/// Thresholds of the regime with an `a2` band. Requires `u2 >= u2**`.
pub fn solve_case_ai(
    problem: &Problem,
    pi: &IndifferencePoint,
    aii: &TwoSidedThresholds,
    u2_dstar: f64,
) -> Result<FlatBandThresholds> {
    let u = &problem.payoffs;
    if u.u2 < u2_dstar - U2_TIE * (1.0 + u2_dstar.abs()) {
        return Err(Error::Existence(format!(
            "u2 = {} is below u2** = {u2_dstar}",
            u.u2
        )));
    }
    if (u.u2 - u2_dstar).abs() <= U2_TIE * (1.0 + u2_dstar.abs()) && u.payoff_symmetry() {
        // The band shrinks onto the indifference curve.
        return Ok(FlatBandThresholds {
            r1_right: pi.pi_lo,
            r2_right: aii.r_right,
            r1_left: pi.pi_hi,
            r2_left: aii.r_left,
        });
    }
    let c_hat = problem.params.c_hat();
    let (x1r, x2r) = solve_paired(
        "right band thresholds",
        (u.u11 - u.u10) / c_hat,
        (u.u2 - u.u10) / c_hat,
    )?;
    let (x1l, x2l) = solve_paired(
        "left band thresholds",
        -(u.u00 - u.u01) / c_hat,
        (u.u2 - u.u00) / c_hat,
    )?;
    Ok(FlatBandThresholds {
        r1_right: sigmoid(x1r),
        r2_right: sigmoid(x2r),
        r1_left: sigmoid(x1l),
        r2_left: sigmoid(x2l),
    })
}

/// State of one shooting step for a candidate lower threshold.
#[derive(Debug, Clone, Copy)]
struct Shot {
    /// Minimum over `y >= pi_lo` of the right value branch minus the `a1`
    /// payoff line. Zero at tangency.
    residual: f64,
    /// Log-odds of the tangency point (or of `pi_lo` if the minimum sits there).
    x_touch: f64,
}

fn shoot(problem: &Problem, pi: &IndifferencePoint, x_left: f64) -> Result<Shot> {
    let u = &problem.payoffs;
    let c_hat = problem.params.c_hat();
    let x_lo = logit(pi.pi_lo);
    let x_hi = logit(pi.pi_hi);
    // Left branch: convex, touching the a0 line at the candidate. Its value
    // above that line at pi_hi, and its slope there.
    let lift = c_hat * log_odds::tangent_gap(x_hi, x_left);
    let slope = c_hat * (log_odds::ell(x_hi) - log_odds::ell(x_left)) - (u.u00 - u.u01);
    // Right branch starts at pi_lo with the same value and slope; it touches
    // the a1 line where its slope reaches u11 - u10.
    let excess = u.u11 - u.u10 - slope;
    if excess <= 0.0 {
        return Ok(Shot {
            residual: lift,
            x_touch: x_lo,
        });
    }
    let d = log_odds::ell_shift(x_lo, excess / c_hat)?;
    let x_touch = x_lo + d;
    Ok(Shot {
        residual: c_hat * (log_odds::tangent_gap(x_hi, x_left) - log_odds::tangent_gap(x_lo, x_touch)),
        x_touch,
    })
}

/// Thresholds of the two-action regime, by shooting on the lower threshold.
pub fn solve_case_b(problem: &Problem, pi: &IndifferencePoint) -> Result<TwoSidedThresholds> {
    let x_hi = logit(pi.pi_hi);
    let residual = |x: f64| shoot(problem, pi, x).map(|s| s.residual);

    // The residual decreases in the candidate and is negative just below pi_hi.
    let mut upper = x_hi;
    let mut step = 1.0;
    let mut lower = x_hi - step;
    while residual(lower)? <= 0.0 {
        upper = lower;
        step *= 2.0;
        lower = x_hi - step;
        if step > 128.0 {
            return Err(Error::NoConvergence {
                what: "two-action shooting bracket",
                lo: lower,
                hi: upper,
                residual: residual(lower)?,
                iterations: 0,
            });
        }
    }

    let scale = 1.0 + problem.payoffs.u00.abs();
    let mut iterations = 0;
    let mut mid = 0.5 * (lower + upper);
    let mut shot = shoot(problem, pi, mid)?;
    while iterations < SHOOT_MAX_ITER {
        iterations += 1;
        mid = 0.5 * (lower + upper);
        shot = shoot(problem, pi, mid)?;
        if shot.residual > 0.0 {
            lower = mid;
        } else if shot.residual < 0.0 {
            upper = mid;
        } else {
            break;
        }
        let next = 0.5 * (lower + upper);
        if next == lower || next == upper {
            break;
        }
    }
    if shot.residual.abs() > SHOOT_RESIDUAL * scale {
        return Err(Error::NoConvergence {
            what: "two-action shooting",
            lo: lower,
            hi: upper,
            residual: shot.residual,
            iterations,
        });
    }
    let out = TwoSidedThresholds {
        r_left: sigmoid(mid),
        r_right: sigmoid(shot.x_touch),
    };
    if !(out.r_left < pi.pi_hi && out.r_right > pi.pi_lo) {
        return Err(Error::NoConvergence {
            what: "two-action shooting (thresholds on the wrong side of the indifference point)",
            lo: out.r_left,
            hi: out.r_right,
            residual: shot.residual,
            iterations,
        });
    }
    Ok(out)
}

/// Classical single-prior sequential test thresholds for losses `a`
/// (accepting `H0` wrongly) and `b` (accepting `H1` wrongly).
pub fn bayesian_sprt(a: f64, b: f64, c_hat: f64) -> Result<BayesianThresholds> {
    if !(a > 0.0 && b > 0.0 && c_hat > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need a, b, c_hat > 0, got ({a}, {b}, {c_hat})"
        )));
    }
    let delta = (a + b) / c_hat;
    let target = (b - a) / c_hat;
    let residual = |x1: f64| -> (f64, f64) {
        match log_odds::ell_shift(x1, delta) {
            Ok(d) => {
                let r1 = sigmoid(x1);
                let r2 = sigmoid(x1 + d);
                // d/dx1 along the ell constraint: 2 (r2 - r1) / (r1 (1 - r1)).
                (
                    log_odds::curvature_diff(x1, d) - target,
                    2.0 * (r2 - r1) / (r1 * (1.0 - r1)),
                )
            }
            Err(_) => (f64::NAN, f64::NAN),
        }
    };
    let anchor = -0.5 * log_odds::ell_shift(0.0, delta)?;
    let (lo, hi) = root::expand_bracket("Bayesian thresholds", |x| residual(x).0, anchor, 1.0, 60.0)?;
    let x1 = root::newton_bracketed(
        "Bayesian thresholds",
        residual,
        lo,
        hi,
        Tolerance {
            x_abs: 1e-13,
            max_iter: 400,
        },
    )?;
    let d = log_odds::ell_shift(x1, delta)?;
    Ok(BayesianThresholds {
        r_left: sigmoid(x1),
        r_right: sigmoid(x1 + d),
    })
}

/// Bayesian thresholds implied by a payoff table with a dominated default:
/// `a = u00 - u01`, `b = u11 - u10`.
pub fn bayesian_from_problem(problem: &Problem) -> Result<BayesianThresholds> {
    let u = &problem.payoffs;
    bayesian_sprt(u.u00 - u.u01, u.u11 - u.u10, problem.params.c_hat())
}

/// Solves every threshold relevant to `problem` and picks the regime.
pub fn classify(problem: &Problem) -> Result<Thresholds> {
    let u = &problem.payoffs;
    let pi = math::indifference(&problem.prior, u)?;
    let aii = solve_case_aii(problem, &pi)?;
    let (u2_star, u2_dstar) = critical_u2(problem, &pi, &aii);
    let regime = if u.no_risky_option() {
        Regime::B(solve_case_b(problem, &pi)?)
    } else if u.payoff_symmetry() {
        if u.u2 >= u2_dstar - U2_TIE * (1.0 + u2_dstar.abs()) {
            Regime::AI(solve_case_ai(problem, &pi, &aii, u2_dstar)?)
        } else {
            Regime::AII(aii)
        }
    } else {
        return Err(Error::Unsupported(format!(
            "payoffs satisfy neither u01 = u10 (u01 = {}, u10 = {}) nor u2 <= min(u01, u10) (u2 = {})",
            u.u01, u.u10, u.u2
        )));
    };
    let start = problem.posterior_pair(0.0, 0.0);
    let tag = if regime.region(start.m_lo_t, start.m_hi_t, &pi).is_stop() {
        CaseTag::NoLearn
    } else {
        match regime {
            Regime::AI(_) => CaseTag::CaseAI,
            Regime::AII(_) => CaseTag::CaseAII,
            Regime::B(_) => CaseTag::CaseB,
        }
    };
    Ok(Thresholds {
        tag,
        regime,
        pi,
        u2_star,
        u2_dstar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{ell, ell_inverse, ell_tilde, PriorInterval};

    fn ells(eps: f64) -> Problem {
        Problem::ellsberg(0.125, eps, 0.01, 1.0).unwrap()
    }

    // Oracle values computed with 40-digit arithmetic, independent of this crate.
    const R_HAT: f64 = 0.524_375_358_857_438_9;
    const R_BAR_004: f64 = 0.528_743_246_814_996_2;
    const Z_BAR_004: f64 = 0.780_570_387_783_077_1;

    #[test]
    fn rhat_and_cutoff() {
        let p = ells(0.04).params;
        assert!((ellsberg_target(&p).unwrap() - 0.390_625).abs() < 1e-15);
        let r_hat = solve_rhat(&p).unwrap();
        assert!((r_hat - R_HAT).abs() < 1e-13);
        assert!((2.0 * r_hat - 1.0 - 0.0488).abs() < 5e-4);
        // ell(r_hat) = 13.283... inverts to 0.9
        assert!((ell_inverse(13.283_338_043_561_328).unwrap() - 0.9).abs() < 1e-12);
        assert!((ell_inverse(0.0).unwrap() - 0.5).abs() < 1e-16);
    }

    #[test]
    fn rbar_branch() {
        let p = ells(0.04).params;
        let r_bar = solve_rbar(0.04, &p).unwrap();
        assert!((r_bar - R_BAR_004).abs() < 1e-13);
        assert!(r_bar > solve_rhat(&p).unwrap());
        assert!((ellsberg_zbar(0.04, r_bar, &p).unwrap() - Z_BAR_004).abs() < 1e-12);
        // eps = 0 is the Bayesian equation ell(r) = 4 alpha^3 / (c sigma^2).
        let r0 = solve_rbar(0.0, &p).unwrap();
        assert!((ell(r0).unwrap() - 2.0 * ellsberg_target(&p).unwrap()).abs() < 1e-12);
        assert!(matches!(solve_rbar(0.05, &p), Err(Error::Branch(_))));
    }

    #[test]
    fn classification_of_ellsberg_examples() {
        let t = classify(&ells(0.05)).unwrap();
        assert_eq!(t.tag, CaseTag::NoLearn);
        assert!(matches!(t.regime, Regime::AI(_)));
        let t = classify(&ells(0.04)).unwrap();
        assert_eq!(t.tag, CaseTag::CaseAII);
        match t.regime {
            Regime::AII(r) => {
                assert!((r.r_right - R_BAR_004).abs() < 1e-12);
                assert!((r.r_left - (1.0 - R_BAR_004)).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ellsberg_flat_band_collapses_to_rhat() {
        let t = classify(&ells(0.05)).unwrap();
        let Regime::AI(r) = t.regime else { panic!() };
        assert!((r.r2_right - R_HAT).abs() < 1e-11);
        assert!((r.r1_right - (1.0 - R_HAT)).abs() < 1e-11);
        assert!((r.r1_left - R_HAT).abs() < 1e-11);
        assert!((r.r2_left - (1.0 - R_HAT)).abs() < 1e-11);
        assert!(r.r2_left < r.r1_left && r.r1_right < r.r2_right);
    }

    #[test]
    fn cutoff_itself_is_no_learning() {
        let p = ells(0.0).params;
        let cutoff = 2.0 * solve_rhat(&p).unwrap() - 1.0;
        let t = classify(&ells(cutoff)).unwrap();
        assert_eq!(t.tag, CaseTag::NoLearn);
    }

    #[test]
    fn u2_dstar_example_and_bounds() {
        let prob = ells(0.04);
        let t = classify(&prob).unwrap();
        // Plug-in: (u00 + u01)/2 + (c_hat/2)(1/(rl(1-rl)) - 1/(pi(1-pi))) with rl = 1 - r_bar.
        let rl = 1.0 - R_BAR_004;
        let c_hat = prob.params.c_hat();
        let expected = 0.5 + 0.5 * c_hat * (1.0 / (rl * (1.0 - rl)) - 1.0 / (0.52 * 0.48));
        assert!((t.u2_dstar - expected).abs() < 1e-12);
        assert!(t.u2_dstar > prob.payoffs.u01);
        assert!((t.u2_star - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_payoffs_give_symmetric_aii() {
        let params = ModelParams::new(-0.3, 0.5, 0.8, 0.02).unwrap();
        let prior = PriorInterval::new(0.35, 0.65).unwrap();
        let u = math::Payoffs::new(1.0, 0.2, 0.2, 1.0, 0.3).unwrap();
        let prob = Problem::new(params, prior, u);
        let pi = math::indifference(&prior, &u).unwrap();
        assert!((pi.pi_lo + pi.pi_hi - 1.0).abs() < 1e-13);
        let r = solve_case_aii(&prob, &pi).unwrap();
        assert!((r.r_left + r.r_right - 1.0).abs() < 1e-12);
        assert!(pi.pi_lo < r.r_right && r.r_left < pi.pi_hi);
    }

    #[test]
    fn case_ai_at_u2_dstar_matches_aii() {
        let params = ModelParams::new(0.0, 1.0, 1.0, 0.05).unwrap();
        let prior = PriorInterval::new(0.3, 0.6).unwrap();
        let base = Problem::new(params, prior, math::Payoffs::new(1.0, 0.1, 0.1, 1.0, 0.5).unwrap());
        let pi = math::indifference(&prior, &base.payoffs).unwrap();
        let aii = solve_case_aii(&base, &pi).unwrap();
        let (_, u2_dstar) = critical_u2(&base, &pi, &aii);
        // Solve just above the tie so the general path is exercised.
        let above = base.with_u2(u2_dstar + 1e-9).unwrap();
        let r = solve_case_ai(&above, &pi, &aii, u2_dstar).unwrap();
        assert!((r.r1_right - pi.pi_lo).abs() < 1e-4);
        assert!((r.r2_right - aii.r_right).abs() < 1e-4);
        assert!((r.r1_left - pi.pi_hi).abs() < 1e-4);
        let below = base.with_u2(u2_dstar - 1e-3).unwrap();
        assert!(matches!(
            solve_case_ai(&below, &pi, &aii, u2_dstar),
            Err(Error::Existence(_))
        ));
    }

    #[test]
    fn case_ai_roots_satisfy_their_equations() {
        let params = ModelParams::new(0.0, 1.0, 1.0, 0.05).unwrap();
        let prior = PriorInterval::new(0.3, 0.6).unwrap();
        let prob = Problem::new(params, prior, math::Payoffs::new(1.0, 0.1, 0.1, 1.0, 0.7).unwrap());
        let t = classify(&prob).unwrap();
        let Regime::AI(r) = t.regime else { panic!("{t:?}") };
        let c_hat = params.c_hat();
        let u = prob.payoffs;
        let e = |r2: f64, r1: f64| (ell(r2).unwrap() - ell(r1).unwrap(), ell_tilde(r2).unwrap() - ell_tilde(r1).unwrap());
        let (a, b) = e(r.r2_right, r.r1_right);
        assert!((a - (u.u11 - u.u10) / c_hat).abs() < 1e-9);
        assert!((b - (u.u2 - u.u10) / c_hat).abs() < 1e-9);
        let (a, b) = e(r.r2_left, r.r1_left);
        assert!((a + (u.u00 - u.u01) / c_hat).abs() < 1e-9);
        assert!((b - (u.u2 - u.u00) / c_hat).abs() < 1e-9);
    }

    #[test]
    fn bayesian_symmetric_example() {
        let b = bayesian_sprt(1.0, 1.0, 0.1).unwrap();
        // ell(r) = 10
        assert!((b.r_right - 0.865_458_941_562_182_1).abs() < 1e-12);
        assert!((b.r_left + b.r_right - 1.0).abs() < 1e-13);
    }

    #[test]
    fn bayesian_asymmetric_satisfies_system() {
        for &(a, bb, c) in &[(1.0, 3.0, 0.2), (5.0, 0.5, 1.0), (0.01, 0.02, 0.001)] {
            let r = bayesian_sprt(a, bb, c).unwrap();
            let q = |r: f64| 1.0 / (r * (1.0 - r));
            let l_gap = ell(r.r_right).unwrap() - ell(r.r_left).unwrap();
            assert!((l_gap - (a + bb) / c).abs() < 1e-8 * (1.0 + l_gap.abs()));
            let q_gap = q(r.r_right) - q(r.r_left);
            assert!((q_gap - (bb - a) / c).abs() < 1e-8 * (1.0 + q_gap.abs()));
            assert!(r.r_left < r.r_right);
        }
    }

    #[test]
    fn case_b_symmetric_example() {
        let prob = Problem::hypothesis_test(1.0, 1.0, 1.0, 0.4, 0.6, 0.05, 1.0).unwrap();
        assert!((prob.params.c_hat() - 0.1).abs() < 1e-15);
        let t = classify(&prob).unwrap();
        assert_eq!(t.tag, CaseTag::CaseB);
        let Regime::B(r) = t.regime else { panic!() };
        // ell(r) = ell(0.4) + 10
        assert!((r.r_right - 0.839_633_656_623_250_8).abs() < 1e-10);
        assert!((r.r_left + r.r_right - 1.0).abs() < 1e-10);
        let bayes = bayesian_sprt(1.0, 1.0, 0.1).unwrap();
        assert!(r.r_right < bayes.r_right && r.r_left > bayes.r_left);
    }

    #[test]
    fn unsupported_payoffs() {
        let params = ModelParams::new(0.0, 1.0, 1.0, 0.05).unwrap();
        let prior = PriorInterval::new(0.3, 0.6).unwrap();
        let prob = Problem::new(params, prior, math::Payoffs::new(1.0, 0.1, 0.3, 1.0, 0.2).unwrap());
        assert!(matches!(classify(&prob), Err(Error::Unsupported(_))));
    }
}
