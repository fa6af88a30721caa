//! Robust optimal learning with a two-point parameter set.
//!
//! A decision maker observes `dZ = theta dt + sigma dW` at flow cost `c`,
//! holds an interval of priors on `theta in {theta0, theta1}` and, when
//! sampling stops, picks one of two ambiguous actions or a default action
//! with a known payoff. The crate solves the maxmin stopping problem in
//! closed form and checks the solution by simulation:
//!
//! * [`math`]: threshold functions, posterior and boundary maps.
//! * [`thresholds`]: critical posterior levels and regime classification.
//! * [`value`]: the piecewise value function and its verification.
//! * [`policy`]: the stopping rule in signal and posterior form.
//! * [`simulation`]: Monte Carlo of the signal under a true drift or the
//!   worst-case measure.

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod math;
pub mod policy;
pub mod problem;
pub mod root;
pub mod simulation;
pub mod thresholds;
pub mod value;

pub use error::{Error, Result};
pub use math::{IndifferencePoint, ModelParams, Payoffs, PosteriorPair, PriorInterval};
pub use policy::{Action, Decision, StoppingPolicy};
pub use problem::{Family, Problem};
pub use simulation::{Measure, SimConfig, SimStats};
pub use thresholds::{CaseTag, Regime, Thresholds};
pub use value::ValueFunction;
