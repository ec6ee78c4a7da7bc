use thiserror::Error;

/// Errors produced by the chain, measure and asymptotics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("parameter {name} = {value} is not a finite number")]
    NonFinite { name: &'static str, value: f64 },
    #[error("p = {0} must lie strictly between 0 and 1")]
    UpProbability(f64),
    #[error("p0 = {0} must be strictly positive")]
    BoundaryUp(f64),
    #[error("r0 = {0} must be nonnegative")]
    BoundaryHold(f64),
    #[error("r0 + p0 = {0} exceeds 1")]
    BoundarySum(f64),
    #[error("truncation size {0} is below the minimum of 2")]
    TruncationTooSmall(usize),
    #[error("invalid initial distribution: {0}")]
    InvalidDistribution(String),
    #[error("z = {0} lies on the cut [-{1}, {1}] where the square-root branch is ambiguous")]
    OnCut(num_complex::Complex64, f64),
    #[error("z = {0} is a pole of m(z)")]
    Pole(num_complex::Complex64),
    #[error("x = {x} lies outside the support of the density, |x| <= {edge}")]
    OffCut { x: f64, edge: f64 },
    #[error("quadrature needs at least one node")]
    NoNodes,
    #[error("theory precondition unmet: {0}")]
    PreconditionUnmet(&'static str),
    #[error("x = {x} outside the quasi-stationary interval ({eta}, 1)")]
    OutsideQsdInterval { x: f64, eta: f64 },
    #[error("limit not guaranteed by cited theory: {0}")]
    LimitNotGuaranteed(&'static str),
    #[error("quasi-stationary tail did not fall below {tol} within {terms} terms")]
    TailNotConverged { tol: f64, terms: usize },
    #[error("quasi-stationary entry alpha_{j} = {value} is negative")]
    NegativeQsdEntry { j: usize, value: f64 },
    #[error("parity mismatch: {0}")]
    ParityMismatch(&'static str),
}

pub type Result<T, E = ChainError> = std::result::Result<T, E>;
