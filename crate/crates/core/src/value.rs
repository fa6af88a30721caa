//! The closed-form value function and its numerical verification.
//!
//! In every continuation region the value is a function of one extreme
//! posterior `y` and solves `V''(y) = c_hat / (y (1 - y))^2`, so it has the
//! form `c_hat ell_hat(y) + C y + C'`. Each piece is tangent to the payoff
//! line it pastes onto, and is stored as that line plus `c_hat` times the
//! height of `ell_hat` above its tangent at the pasting point. This keeps the
//! evaluation free of cancellation near the stopping boundaries.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{self, log_odds, logit, sigmoid};
use crate::problem::Problem;
use crate::thresholds::{self, Regime, Region, Thresholds};

/// `V(y) = c_hat (2y - 1) log(y / (1 - y)) + slope * y + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PieceCoefficients {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Line {
    A0,
    A1,
}

/// A continuation piece: payoff line plus `c_hat` times the tangent gap of
/// `ell_hat` at the pasting point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    line: Line,
    x_anchor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueFunction {
    problem: Problem,
    thresholds: Thresholds,
    left: Piece,
    right: Piece,
}

/// A piece boundary in signal space at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boundary {
    pub label: &'static str,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactTolerance {
    /// Finite-difference step in `z`.
    pub step: f64,
    pub value: f64,
    pub slope: f64,
    /// Relative tolerance on `V''(y) (y(1-y))^2 = c_hat` inside pieces.
    pub ode: f64,
}

impl Default for ContactTolerance {
    fn default() -> Self {
        Self {
            step: 1e-5,
            value: 1e-9,
            slope: 1e-6,
            ode: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactCheck {
    pub label: &'static str,
    pub z: f64,
    pub value_left: f64,
    pub value_right: f64,
    pub slope_left: f64,
    pub slope_right: f64,
}

impl ContactCheck {
    pub fn value_gap(&self) -> f64 {
        (self.value_left - self.value_right).abs()
    }

    pub fn slope_gap(&self) -> f64 {
        (self.slope_left - self.slope_right).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport {
    pub t: f64,
    pub checks: Vec<ContactCheck>,
    pub violations: Vec<String>,
}

impl ContactReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ValueFunction {
    pub fn build(problem: &Problem, thresholds: &Thresholds) -> Result<Self> {
        let u = &problem.payoffs;
        let (left, right) = match thresholds.regime {
            Regime::AI(r) => {
                if !u.payoff_symmetry() {
                    return Err(Error::CaseMismatch {
                        expected: "symmetric payoffs",
                        found: "a.i",
                    });
                }
                (r.r2_left, r.r2_right)
            }
            Regime::AII(r) => {
                if !u.payoff_symmetry() {
                    return Err(Error::CaseMismatch {
                        expected: "symmetric payoffs",
                        found: "a.ii",
                    });
                }
                (r.r_left, r.r_right)
            }
            Regime::B(r) => {
                if !u.no_risky_option() {
                    return Err(Error::CaseMismatch {
                        expected: "dominated default action",
                        found: "b",
                    });
                }
                (r.r_left, r.r_right)
            }
        };
        Ok(Self {
            problem: *problem,
            thresholds: *thresholds,
            left: Piece {
                line: Line::A0,
                x_anchor: logit(left),
            },
            right: Piece {
                line: Line::A1,
                x_anchor: logit(right),
            },
        })
    }

    /// Classifies `problem` and builds its value function.
    pub fn solve(problem: &Problem) -> Result<Self> {
        Self::build(problem, &thresholds::classify(problem)?)
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    fn c_hat(&self) -> f64 {
        self.problem.params.c_hat()
    }

    fn line(&self, line: Line, y: f64) -> f64 {
        match line {
            Line::A0 => self.problem.payoffs.a0_payoff(y),
            Line::A1 => self.problem.payoffs.a1_payoff(y),
        }
    }

    fn line_slope(&self, line: Line) -> f64 {
        let u = &self.problem.payoffs;
        match line {
            Line::A0 => -(u.u00 - u.u01),
            Line::A1 => u.u11 - u.u10,
        }
    }

    fn piece_value(&self, piece: &Piece, x: f64) -> f64 {
        self.line(piece.line, sigmoid(x)) + self.c_hat() * log_odds::tangent_gap(x, piece.x_anchor)
    }

    fn coefficients_of(&self, piece: &Piece) -> PieceCoefficients {
        let c_hat = self.c_hat();
        let r = sigmoid(piece.x_anchor);
        let line_at_zero = self.line(piece.line, 0.0);
        let ell = log_odds::ell(piece.x_anchor);
        PieceCoefficients {
            slope: self.line_slope(piece.line) - c_hat * ell,
            intercept: line_at_zero + c_hat * (ell * r - log_odds::ell_hat(piece.x_anchor)),
        }
    }

    /// Coefficients of the piece valued through the upper posterior.
    pub fn left_coefficients(&self) -> PieceCoefficients {
        self.coefficients_of(&self.left)
    }

    /// Coefficients of the piece valued through the lower posterior.
    pub fn right_coefficients(&self) -> PieceCoefficients {
        self.coefficients_of(&self.right)
    }

    /// The four numbered constants in their customary order. In the regimes
    /// with a default action the left pair comes first; in the two-action
    /// regime the right pair comes first.
    pub fn constants(&self) -> [f64; 4] {
        let l = self.left_coefficients();
        let r = self.right_coefficients();
        match self.thresholds.regime {
            Regime::AI(_) | Regime::AII(_) => [l.slope, l.intercept, r.slope, r.intercept],
            Regime::B(_) => [r.slope, r.intercept, l.slope, l.intercept],
        }
    }

    /// Piece as a function of the upper posterior (left) or the lower
    /// posterior (right), evaluated off its own region as well.
    pub fn left_piece(&self, y: f64) -> f64 {
        self.piece_value(&self.left, logit(y))
    }

    pub fn right_piece(&self, y: f64) -> f64 {
        self.piece_value(&self.right, logit(y))
    }

    pub fn region(&self, t: f64, z: f64) -> Region {
        let pair = self.problem.posterior_pair(t, z);
        self.thresholds.regime.region(pair.m_lo_t, pair.m_hi_t, &self.thresholds.pi)
    }

    pub fn evaluate(&self, t: f64, z: f64) -> f64 {
        let p = &self.problem;
        let lp = math::log_phi(t, z, &p.params);
        let x_hi = logit(p.prior.m_hi()) + lp;
        let x_lo = logit(p.prior.m_lo()) + lp;
        match self.thresholds.regime.region(sigmoid(x_lo), sigmoid(x_hi), &self.thresholds.pi) {
            Region::StopA0 => p.payoffs.a0_payoff(sigmoid(x_hi)),
            Region::StopA1 => p.payoffs.a1_payoff(sigmoid(x_lo)),
            Region::StopA2 => p.payoffs.u2,
            Region::ContinueLeft => self.piece_value(&self.left, x_hi),
            Region::ContinueRight => self.piece_value(&self.right, x_lo),
        }
    }

    /// `X(t, z)`: best worst-case payoff from stopping now.
    pub fn immediate_payoff(&self, t: f64, z: f64) -> f64 {
        let pair = self.problem.posterior_pair(t, z);
        immediate_payoff(&self.problem, pair.m_lo_t, pair.m_hi_t)
    }

    /// Boundaries between pieces at time `t`, in increasing order of `z`.
    /// Degenerate (zero-width) pieces produce coincident boundaries.
    pub fn boundaries(&self, t: f64) -> Vec<Boundary> {
        let p = &self.problem;
        let x_hi0 = logit(p.prior.m_hi());
        let x_lo0 = logit(p.prior.m_lo());
        let via_hi = |r: f64| math::boundary_from_log_odds(logit(r), x_hi0, t, &p.params);
        let via_lo = |r: f64| math::boundary_from_log_odds(logit(r), x_lo0, t, &p.params);
        let pi = &self.thresholds.pi;
        match self.thresholds.regime {
            Regime::AI(r) => vec![
                Boundary {
                    label: "a0 stopping",
                    z: via_hi(r.r2_left),
                },
                Boundary {
                    label: "a2 band (left)",
                    z: via_hi(r.r1_left),
                },
                Boundary {
                    label: "a2 band (right)",
                    z: via_lo(r.r1_right),
                },
                Boundary {
                    label: "a1 stopping",
                    z: via_lo(r.r2_right),
                },
            ],
            Regime::AII(r) | Regime::B(r) => vec![
                Boundary {
                    label: "a0 stopping",
                    z: via_hi(r.r_left),
                },
                Boundary {
                    label: "switching",
                    z: via_hi(pi.pi_hi),
                },
                Boundary {
                    label: "a1 stopping",
                    z: via_lo(r.r_right),
                },
            ],
        }
    }

    /// Checks value matching and smooth pasting in `z` at every boundary,
    /// and the ordinary differential equation inside each continuation piece.
    pub fn check_smooth_contact(&self, t: f64, tol: ContactTolerance) -> ContactReport {
        let h = tol.step;
        let f = |z: f64| self.evaluate(t, z);
        let mut checks = Vec::new();
        let mut violations = Vec::new();
        let bounds = self.boundaries(t);
        for b in &bounds {
            let z = b.z;
            let (l1, l2, l3) = (f(z - h), f(z - 2.0 * h), f(z - 3.0 * h));
            let (r1, r2, r3) = (f(z + h), f(z + 2.0 * h), f(z + 3.0 * h));
            // Quadratic extrapolation of each side onto the boundary.
            let check = ContactCheck {
                label: b.label,
                z,
                value_left: 3.0 * l1 - 3.0 * l2 + l3,
                value_right: 3.0 * r1 - 3.0 * r2 + r3,
                slope_left: (2.5 * l1 - 4.0 * l2 + 1.5 * l3) / h,
                slope_right: -(2.5 * r1 - 4.0 * r2 + 1.5 * r3) / h,
            };
            if !(check.value_gap() <= tol.value) {
                violations.push(format!(
                    "{} at z = {z}: value jumps by {:e}",
                    b.label,
                    check.value_gap()
                ));
            }
            if !(check.slope_gap() <= tol.slope) {
                violations.push(format!(
                    "{} at z = {z}: slope jumps from {} to {} (gap {:e})",
                    b.label,
                    check.slope_left,
                    check.slope_right,
                    check.slope_gap()
                ));
            }
            checks.push(check);
        }
        for (piece, name, lo, hi) in self.continuation_spans(&bounds) {
            if !(hi - lo > 0.0) {
                continue;
            }
            let pair = self.problem.posterior_pair(t, 0.5 * (lo + hi));
            let y = if name == "left" { pair.m_hi_t } else { pair.m_lo_t };
            let hy = 1e-3 * (y * (1.0 - y)).min(0.25);
            let g = |y: f64| self.piece_value(&piece, logit(y));
            let second = (g(y + hy) - 2.0 * g(y) + g(y - hy)) / (hy * hy);
            let scaled = second * (y * (1.0 - y)).powi(2);
            let c_hat = self.c_hat();
            if !((scaled - c_hat).abs() <= tol.ode * c_hat) {
                violations.push(format!(
                    "{name} piece at y = {y}: V'' (y(1-y))^2 = {scaled}, expected {c_hat}"
                ));
            }
        }
        ContactReport {
            t,
            checks,
            violations,
        }
    }

    fn continuation_spans(&self, bounds: &[Boundary]) -> Vec<(Piece, &'static str, f64, f64)> {
        match self.thresholds.regime {
            Regime::AI(_) => vec![
                (self.left, "left", bounds[0].z, bounds[1].z),
                (self.right, "right", bounds[2].z, bounds[3].z),
            ],
            Regime::AII(_) | Regime::B(_) => vec![
                (self.left, "left", bounds[0].z, bounds[1].z),
                (self.right, "right", bounds[1].z, bounds[2].z),
            ],
        }
    }

    /// `-c + v_t + sigma^2/2 v_zz + f v_z` with the worst-case drift `f`, by
    /// finite differences. Only meaningful away from piece boundaries.
    pub fn hjb_residual(&self, t: f64, z: f64) -> Result<f64> {
        if self.region(t, z).is_stop() {
            return Err(Error::StoppingRegion { t, z });
        }
        Ok(self.generator_residual(t, z))
    }

    /// `max(X - v, -c + L v)`, which vanishes wherever the variational
    /// inequality holds with equality.
    pub fn variational_residual(&self, t: f64, z: f64) -> f64 {
        let gap = self.immediate_payoff(t, z) - self.evaluate(t, z);
        gap.max(self.generator_residual(t, z))
    }

    fn generator_residual(&self, t: f64, z: f64) -> f64 {
        const H: f64 = 1e-4;
        let p = &self.problem;
        let v = |t: f64, z: f64| self.evaluate(t, z);
        let v0 = v(t, z);
        let v_z = (v(t, z + H) - v(t, z - H)) / (2.0 * H);
        let v_zz = (v(t, z + H) - 2.0 * v0 + v(t, z - H)) / (H * H);
        let v_t = if t >= H {
            (v(t + H, z) - v(t - H, z)) / (2.0 * H)
        } else {
            (-3.0 * v0 + 4.0 * v(t + H, z) - v(t + 2.0 * H, z)) / (2.0 * H)
        };
        let drift = math::worst_case_drift(t, z, &p.prior, &self.thresholds.pi, &p.params);
        let s = p.params.sigma();
        -p.params.c() + v_t + 0.5 * s * s * v_zz + drift * v_z
    }
}

/// Best worst-case payoff of stopping with posterior interval
/// `[m_lo, m_hi]`.
pub fn immediate_payoff(problem: &Problem, m_lo: f64, m_hi: f64) -> f64 {
    let u = &problem.payoffs;
    u.a0_payoff(m_hi).max(u.a1_payoff(m_lo)).max(u.u2)
}

/// Value at the origin of the two-urn problem in closed form: one half
/// plus the option value of learning, which vanishes once the ambiguity
/// reaches the cutoff.
pub fn ellsberg_v0(alpha: f64, eps: f64, c: f64, sigma: f64) -> Result<f64> {
    let params = math::ModelParams::new(-alpha, alpha, sigma, c)?;
    let r_hat = thresholds::solve_rhat(&params)?;
    if 0.5 * (1.0 + eps) >= r_hat {
        return Ok(0.5);
    }
    let r_bar = thresholds::solve_rbar(eps, &params)?;
    let scale = c * sigma * sigma / (4.0 * alpha * alpha);
    Ok(0.5 + scale * (1.0 / (r_bar * (1.0 - r_bar)) - 4.0 / ((1.0 + eps) * (1.0 - eps))))
}
