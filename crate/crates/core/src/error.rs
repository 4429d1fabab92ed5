use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("parameter r = {r} is outside {allowed} required by {operation}")]
    ParameterRange {
        operation: &'static str,
        r: f64,
        allowed: &'static str,
    },
    #[error("{what} = {requested} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    #[error("nodes {left} and {right} are not neighbours in the tree")]
    NotNeighbours { left: String, right: String },
    #[error("{operation} did not converge: last estimate {estimate} (error bar {error})")]
    NoConvergence {
        operation: &'static str,
        estimate: f64,
        error: f64,
    },
    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },
    #[error("exponential sum for q = {q}, m = {m} is not integral (residual {residual:e})")]
    NotIntegral { q: u64, m: i64, residual: f64 },
    #[error("pole of the Moebius involution at x = {0}")]
    Pole(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
