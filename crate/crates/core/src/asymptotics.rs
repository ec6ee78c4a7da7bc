//! Quasi-stationary distributions and ratio limits, both governed by the
//! supremum `eta` of the support of the spectral measure.

use crate::chain::ChainParams;
use crate::chebyshev::q_poly;
use crate::error::{ChainError, Result};
use crate::spectral::{classify_region, SpectralMeasure, EQUAL_RATE_TOL};

/// Hard cap on the number of quasi-stationary terms.
pub const MAX_QSD_TERMS: usize = 10_000_000;

/// Whether quasi-stationary distributions exist for a chain with certain
/// absorption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QsdExistence {
    /// `eta = 1`: no quasi-stationary distribution.
    None { eta: f64 },
    /// One distribution for every `x` in the open interval `(eta, 1)`.
    Family { eta: f64 },
}

impl QsdExistence {
    pub fn eta(&self) -> f64 {
        match *self {
            QsdExistence::None { eta } | QsdExistence::Family { eta } => eta,
        }
    }
}

/// Decides existence of quasi-stationary distributions.
///
/// Requires `q0 > 0` (mass can leave) and `p <= 1/2` (leaving is certain).
pub fn qsd_exists(params: &ChainParams) -> Result<QsdExistence> {
    if params.q0() <= 0.0 {
        return Err(ChainError::PreconditionUnmet("q0 = 0, the chain never absorbs"));
    }
    if params.p() > 0.5 {
        return Err(ChainError::PreconditionUnmet(
            "p > 1/2, absorption is not certain",
        ));
    }
    let eta = SpectralMeasure::new(*params).eta();
    if eta >= 1.0 - EQUAL_RATE_TOL {
        Ok(QsdExistence::None { eta })
    } else {
        Ok(QsdExistence::Family { eta })
    }
}

/// A quasi-stationary distribution, truncated where its geometric tail
/// drops below the requested tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct QsdDistribution {
    pub x: f64,
    pub alpha: Vec<f64>,
    /// Index of the last stored entry.
    pub jcut: usize,
    /// Bound on `Σ_{j > jcut} alpha_j`.
    pub tail_bound: f64,
}

impl QsdDistribution {
    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Geometric decay rate `sqrt(p/q) (x* + sqrt(x*^2 - 1))` of `pi_j Q_j(x)`.
pub fn tail_ratio(params: &ChainParams, x: f64) -> f64 {
    let xs = x / params.cut_edge();
    (params.p() / params.q()).sqrt() * (xs + (xs * xs - 1.0).max(0.0).sqrt())
}

/// `alpha_j(x) = pi_j (1 - x) Q_j(x) / q0` for `x` in `(eta, 1)`.
///
/// The products `pi_j Q_j(x)` are generated by the row form of the same
/// eigen-relation, `x a_0 = r0 a_0 + q a_1`, `x a_1 = p0 a_0 + q a_2`,
/// `x a_j = p a_{j-1} + q a_{j+1}`, which avoids the under- and overflow of
/// the two factors separately. The leading mode of that recurrence is the
/// decaying tail itself, so forward evaluation is stable.
pub fn qsd_alpha(params: &ChainParams, x: f64, tol: f64) -> Result<QsdDistribution> {
    let eta = match qsd_exists(params)? {
        QsdExistence::None { .. } => {
            return Err(ChainError::PreconditionUnmet("eta = 1, no quasi-stationary distribution"))
        }
        QsdExistence::Family { eta } => eta,
    };
    if !(x > eta && x < 1.0) {
        return Err(ChainError::OutsideQsdInterval { x, eta });
    }
    let (p, q, p0, r0, q0) = (params.p(), params.q(), params.p0(), params.r0(), params.q0());
    let rho = tail_ratio(params, x);
    let scale = (1.0 - x) / q0;

    let mut alpha = vec![scale];
    let mut prev = 1.0;
    let mut cur = (x - r0) / q;
    let mut j = 1;
    loop {
        let value = scale * cur;
        if value < 0.0 {
            return Err(ChainError::NegativeQsdEntry { j, value });
        }
        alpha.push(value);
        let bound = value / (1.0 - rho);
        if bound < tol {
            return Ok(QsdDistribution {
                x,
                alpha,
                jcut: j,
                tail_bound: bound,
            });
        }
        if j >= MAX_QSD_TERMS {
            return Err(ChainError::TailNotConverged { tol, terms: j });
        }
        let back = if j == 1 { p0 } else { p };
        let next = (x * cur - back * prev) / q;
        prev = cur;
        cur = next;
        j += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMode {
    Full,
    EvenSubsequence,
    OddSubsequence,
}

impl RatioMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RatioMode::Full => "full",
            RatioMode::EvenSubsequence => "even-subsequence",
            RatioMode::OddSubsequence => "odd-subsequence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn of(k: usize) -> Self {
        if k.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Limit of `P^n[i][j] / P^n[k][l]` as `n` grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioLimitResult {
    pub limit: f64,
    pub mode: RatioMode,
    pub eta_used: f64,
    /// The measure has no atom, so the value is the formula at `eta` without
    /// the backing of an atom-based convergence theorem.
    pub no_mass: bool,
}

fn limit_at(params: &ChainParams, eta: f64, [i, j, k, l]: [usize; 4]) -> f64 {
    let qv = |m: usize| q_poly(params, m, eta);
    params.pi_weight(j) / params.pi_weight(l) * (qv(i) * qv(j)) / (qv(k) * qv(l))
}

/// `lim P^n[i][j] / P^n[k][l] = (pi_j / pi_l) Q_i(eta) Q_j(eta) / (Q_k(eta) Q_l(eta))`.
///
/// Available for aperiodic chains (`r0 != 0`) that are recurrent, where the
/// limit is `pi_j / pi_l`, or whose measure has an atom. Other chains are
/// refused.
pub fn ratio_limit(params: &ChainParams, i: usize, j: usize, k: usize, l: usize) -> Result<RatioLimitResult> {
    if params.r0() == 0.0 {
        return Err(ChainError::LimitNotGuaranteed(
            "r0 = 0 makes the chain periodic; use the parity subsequences",
        ));
    }
    if classify_region(params).recurrent {
        return Ok(RatioLimitResult {
            limit: params.pi_weight(j) / params.pi_weight(l),
            mode: RatioMode::Full,
            eta_used: 1.0,
            no_mass: false,
        });
    }
    let measure = SpectralMeasure::new(*params);
    if measure.masses().is_empty() {
        return Err(ChainError::LimitNotGuaranteed(
            "transient chain without an atom in its spectral measure",
        ));
    }
    let eta = measure.eta();
    Ok(RatioLimitResult {
        limit: limit_at(params, eta, [i, j, k, l]),
        mode: RatioMode::Full,
        eta_used: eta,
        no_mass: false,
    })
}

/// Ratio limit along even or odd `n` for the period-2 chain `r0 = 0`.
///
/// `P^n[i][j]` vanishes unless `n ≡ i - j (mod 2)`, so `i - j` and `k - l`
/// must share the requested parity.
pub fn ratio_limit_parity(
    params: &ChainParams,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    parity: Parity,
) -> Result<RatioLimitResult> {
    if params.r0() != 0.0 {
        return Err(ChainError::LimitNotGuaranteed(
            "parity subsequences are defined for r0 = 0 only",
        ));
    }
    let first = Parity::of(i.abs_diff(j));
    if first != Parity::of(k.abs_diff(l)) {
        return Err(ChainError::ParityMismatch("i - j and k - l differ in parity"));
    }
    if first != parity {
        return Err(ChainError::ParityMismatch(
            "P^n[i][j] vanishes identically along the requested subsequence",
        ));
    }
    let measure = SpectralMeasure::new(*params);
    let eta = measure.eta();
    Ok(RatioLimitResult {
        limit: limit_at(params, eta, [i, j, k, l]),
        mode: match parity {
            Parity::Even => RatioMode::EvenSubsequence,
            Parity::Odd => RatioMode::OddSubsequence,
        },
        eta_used: eta,
        no_mass: measure.masses().is_empty(),
    })
}
