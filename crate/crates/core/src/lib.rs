//! Spectral analysis of birth-and-death chains whose transition
//! probabilities are constant away from the origin.
//!
//! The orthogonality measure of such a chain is a density on the cut
//! `[-2 sqrt(pq), 2 sqrt(pq)]` plus at most two atoms. From it the crate
//! evaluates n-step transition probabilities through the Karlin-McGregor
//! representation, classifies parameter regions by atom count, and builds
//! quasi-stationary distributions and ratio limits. Every spectral quantity
//! can be checked against an exact truncated matrix power.

pub mod asymptotics;
pub mod chain;
pub mod chebyshev;
mod dd;
pub mod error;
pub mod quadrature;
pub mod spectral;
pub mod verify;

pub use asymptotics::{
    qsd_alpha, qsd_exists, ratio_limit, ratio_limit_parity, Parity, QsdDistribution, QsdExistence,
    RatioLimitResult, RatioMode,
};
pub use chain::{
    absorption_probability, evolve_distribution, oracle_transition, ChainParams, PiWeights,
    TruncatedChain,
};
pub use chebyshev::{cheb_t, cheb_u, q_poly, q_poly_closed, q_poly_recurrence, PolyEval};
pub use error::{ChainError, Result};
pub use quadrature::{
    build_rule, gram_matrix, integrate_measure, km_transition, QuadratureRule, TransitionResult,
};
pub use spectral::{
    classify_region, denominator_roots, density_at, point_masses, stieltjes_m, stieltjes_n,
    MassPoint, RegionClass, SpectralMeasure, StieltjesM,
};
