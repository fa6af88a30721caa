use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} lies outside the open unit interval")]
    Domain { name: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what}: no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NoBracket {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("{what}: no convergence after {iterations} iterations (bracket [{lo}, {hi}], residual {residual})")]
    NoConvergence {
        what: &'static str,
        lo: f64,
        hi: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("wrong branch: {0}")]
    Branch(String),

    #[error("no solution exists: {0}")]
    Existence(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("case mismatch: expected {expected}, found {found}")]
    CaseMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("point (t = {t}, z = {z}) lies in the stopping region")]
    StoppingRegion { t: f64, z: f64 },
}
