//! Chain parameters, potential coefficients and the truncated-matrix oracle.
//!
//! The chain lives on the states `0, 1, 2, ...` with one-step matrix
//!
//! ```text
//! r0 p0  0  0 ...
//!  q  0  p  0 ...
//!  0  q  0  p ...
//! ```
//!
//! and an implicit absorbing state reached from state 0 with probability
//! `q0 = 1 - r0 - p0`.

use crate::error::{ChainError, Result};

/// `1 - r0 - p0` at or below this is treated as an exactly conservative
/// boundary (`q0 = 0`).
pub const CONSERVATIVE_TOL: f64 = 1e-12;

/// Validated parameters of a birth-and-death chain with constant rates
/// away from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    p: f64,
    q: f64,
    p0: f64,
    r0: f64,
    q0: f64,
}

impl ChainParams {
    /// Validates `(p, p0, r0)` and derives `q = 1 - p`, `q0 = 1 - r0 - p0`.
    ///
    /// When `1 - r0 - p0` is within [`CONSERVATIVE_TOL`] of zero the chain is
    /// taken to be conservative: `q0 = 0` and `r0 = 1 - p0`.
    pub fn new(p: f64, p0: f64, r0: f64) -> Result<Self> {
        for (name, value) in [("p", p), ("p0", p0), ("r0", r0)] {
            if !value.is_finite() {
                return Err(ChainError::NonFinite { name, value });
            }
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(ChainError::UpProbability(p));
        }
        if p0 <= 0.0 {
            return Err(ChainError::BoundaryUp(p0));
        }
        if r0 < 0.0 {
            return Err(ChainError::BoundaryHold(r0));
        }
        if r0 + p0 > 1.0 + CONSERVATIVE_TOL {
            return Err(ChainError::BoundarySum(r0 + p0));
        }
        let lost = 1.0 - r0 - p0;
        let (r0, q0) = if lost <= CONSERVATIVE_TOL {
            // Conservative chain: pin r0 so that row 0 sums to one.
            (1.0 - p0, 0.0)
        } else {
            (r0, lost)
        };
        Ok(Self {
            p,
            q: 1.0 - p,
            p0,
            r0,
            q0,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Probability of absorption from state 0 in one step.
    pub fn q0(&self) -> f64 {
        self.q0
    }

    /// Half-width `2 sqrt(pq)` of the cut carrying the continuous spectrum.
    pub fn cut_edge(&self) -> f64 {
        2.0 * (self.p * self.q).sqrt()
    }

    /// True when no mass leaves through the origin (`r0 + p0 = 1`).
    pub fn is_conservative(&self) -> bool {
        self.q0 == 0.0
    }

    /// One-step transition probability `P[i][j]` of the infinite chain.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.r0,
            (0, 1) => self.p0,
            _ if j == i + 1 => self.p,
            _ if i == j + 1 => self.q,
            _ => 0.0,
        }
    }

    /// Potential coefficient `pi_j`, with `pi_0 = 1` and
    /// `pi_j = p0 p^(j-1) / q^j` for `j >= 1`.
    pub fn pi_weight(&self, j: usize) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let ratio = self.p / self.q;
        match i32::try_from(j - 1) {
            Ok(k) => self.p0 / self.q * ratio.powi(k),
            Err(_) => self.p0 / self.q * ((j - 1) as f64 * ratio.ln()).exp(),
        }
    }

    /// The finite section of the transition matrix on states `0..size`.
    pub fn truncate(&self, size: usize) -> Result<TruncatedChain> {
        TruncatedChain::new(*self, size)
    }
}

/// Potential coefficients `pi_0, pi_1, ...`, grown on demand.
#[derive(Debug, Clone)]
pub struct PiWeights {
    params: ChainParams,
    values: Vec<f64>,
}

impl PiWeights {
    pub fn new(params: ChainParams) -> Self {
        Self {
            params,
            values: vec![1.0],
        }
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// Returns `pi_j`, extending the cached table through `j`.
    pub fn get(&mut self, j: usize) -> f64 {
        self.extend_to(j);
        self.values[j]
    }

    pub fn extend_to(&mut self, j: usize) {
        while self.values.len() <= j {
            let k = self.values.len();
            self.values.push(self.params.pi_weight(k));
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The `size x size` upper-left block of the transition matrix, stored by
/// its three bands.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedChain {
    params: ChainParams,
    size: usize,
}

impl TruncatedChain {
    pub fn new(params: ChainParams, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(ChainError::TruncationTooSmall(size));
        }
        Ok(Self { params, size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.size || j >= self.size {
            return 0.0;
        }
        self.params.entry(i, j)
    }

    /// Dense row-major copy of the matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.size - 1);
        (lo..=hi).map(|j| self.get(i, j)).sum()
    }

    /// One step of a row vector: `out[j] = sum_i row[i] P[i][j]`.
    ///
    /// `row` must have length `size`.
    pub fn step(&self, row: &[f64], out: &mut [f64]) {
        debug_assert_eq!(row.len(), self.size);
        debug_assert_eq!(out.len(), self.size);
        let ChainParams { p, q, p0, r0, .. } = self.params;
        let m = self.size;
        out[0] = row[0] * r0 + row[1] * q;
        if m > 2 {
            out[1] = row[0] * p0 + row[2] * q;
        } else {
            out[1] = row[0] * p0;
        }
        for j in 2..m {
            let from_below = row[j - 1] * p;
            out[j] = if j + 1 < m {
                from_below + row[j + 1] * q
            } else {
                from_below
            };
        }
    }

    /// Evolves `initial` (zero-padded to `size`) through `n` steps.
    pub fn evolve(&self, initial: &[f64], n: usize) -> Vec<f64> {
        let mut cur = vec![0.0; self.size];
        let k = initial.len().min(self.size);
        cur[..k].copy_from_slice(&initial[..k]);
        let mut next = vec![0.0; self.size];
        for _ in 0..n {
            self.step(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

fn oracle_size(i: usize, j: usize, n: usize) -> usize {
    i.max(j) + n + 2
}

/// Exact `(P^n)[i][j]` of the infinite chain.
///
/// A walk started at `i` moves at most one state per step, so a section of
/// size `max(i, j) + n + 2` reproduces the infinite-chain value.
pub fn oracle_transition(params: &ChainParams, i: usize, j: usize, n: usize) -> f64 {
    oracle_transition_with_size(params, i, j, n, oracle_size(i, j, n))
}

/// [`oracle_transition`] with an explicit section size, which must exceed
/// `max(i, j) + n`.
pub fn oracle_transition_with_size(
    params: &ChainParams,
    i: usize,
    j: usize,
    n: usize,
    size: usize,
) -> f64 {
    assert!(size > i.max(j) + n, "section too small for an exact answer");
    let chain = TruncatedChain::new(*params, size).expect("size >= 2");
    let mut start = vec![0.0; i + 1];
    start[i] = 1.0;
    chain.evolve(&start, n)[j]
}

/// The row `(P^n)[i][·]` restricted to states `0..=i + n`.
pub fn oracle_row(params: &ChainParams, i: usize, n: usize) -> Vec<f64> {
    let size = oracle_size(i, i, n);
    let chain = TruncatedChain::new(*params, size).expect("size >= 2");
    let mut start = vec![0.0; i + 1];
    start[i] = 1.0;
    let mut row = chain.evolve(&start, n);
    row.truncate(i + n + 1);
    row
}

fn validate_distribution(initial: &[f64]) -> Result<()> {
    if initial.is_empty() {
        return Err(ChainError::InvalidDistribution("empty support".into()));
    }
    if let Some((k, v)) = initial
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(ChainError::InvalidDistribution(format!(
            "entry {k} = {v} is negative or not finite"
        )));
    }
    let total: f64 = initial.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ChainError::InvalidDistribution(format!(
            "entries sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// State distribution after `n` steps together with the mass absorbed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub distribution: Vec<f64>,
    pub absorbed: f64,
}

/// Evolves a finitely supported initial distribution for `n` steps,
/// tracking the mass lost through state 0.
pub fn evolve_distribution(params: &ChainParams, initial: &[f64], n: usize) -> Result<Evolution> {
    validate_distribution(initial)?;
    let chain = TruncatedChain::new(*params, initial.len() + n + 2)?;
    let mut cur = vec![0.0; chain.size()];
    cur[..initial.len()].copy_from_slice(initial);
    let mut next = vec![0.0; chain.size()];
    let mut absorbed = 0.0;
    for _ in 0..n {
        absorbed += cur[0] * params.q0();
        chain.step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Evolution {
        distribution: cur,
        absorbed,
    })
}

/// Probability `p_{-1}(n)` of having been absorbed by time `n`.
pub fn absorption_probability(params: &ChainParams, initial: &[f64], n: usize) -> Result<f64> {
    evolve_distribution(params, initial, n).map(|e| e.absorbed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equal_rates() -> ChainParams {
        ChainParams::new(0.2, 0.2, 0.5).unwrap()
    }

    fn reflecting() -> ChainParams {
        ChainParams::new(0.5, 1.0, 0.0).unwrap()
    }

    #[test]
    fn derived_rates() {
        let a = equal_rates();
        assert_eq!(a.q(), 0.8);
        assert_relative_eq!(a.q0(), 0.3, epsilon = 1e-15);
        let e = ChainParams::new(0.3, 0.3, 0.7).unwrap();
        assert!(e.is_conservative());
        assert_eq!(e.r0(), 1.0 - 0.3);
        let c = reflecting();
        assert_eq!(c.q(), 0.5);
        assert_eq!(c.q0(), 0.0);
        assert!(c.is_conservative());
    }

    #[test]
    fn rejects_each_constraint_separately() {
        assert!(matches!(
            ChainParams::new(0.2, 0.9, 0.2),
            Err(ChainError::BoundarySum(_))
        ));
        assert!(matches!(
            ChainParams::new(0.0, 0.5, 0.2),
            Err(ChainError::UpProbability(_))
        ));
        assert!(matches!(
            ChainParams::new(1.0, 0.5, 0.2),
            Err(ChainError::UpProbability(_))
        ));
        assert!(matches!(
            ChainParams::new(0.4, 0.0, 0.2),
            Err(ChainError::BoundaryUp(_))
        ));
        assert!(matches!(
            ChainParams::new(0.4, 0.5, -0.1),
            Err(ChainError::BoundaryHold(_))
        ));
        assert!(matches!(
            ChainParams::new(f64::NAN, 0.5, 0.1),
            Err(ChainError::NonFinite { name: "p", .. })
        ));
    }

    #[test]
    fn pi_weights() {
        let a = equal_rates();
        assert_eq!(a.pi_weight(0), 1.0);
        assert_relative_eq!(a.pi_weight(1), 0.25, max_relative = 1e-15);
        assert_relative_eq!(a.pi_weight(2), 0.0625, max_relative = 1e-15);
        let mut table = PiWeights::new(a);
        assert_relative_eq!(table.get(3), 0.015625, max_relative = 1e-14);
        assert_eq!(table.values().len(), 4);
    }

    #[test]
    fn truncated_entries() {
        assert_eq!(equal_rates().truncate(2).unwrap().to_dense(), vec![vec![0.5, 0.2], vec![0.8, 0.0]]);
        assert_eq!(
            reflecting().truncate(3).unwrap().to_dense(),
            vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 0.5, 0.0]]
        );
        let t = equal_rates().truncate(10).unwrap();
        assert_relative_eq!(t.row_sum(0), 0.7, epsilon = 1e-15);
        for i in 0..10 {
            assert!(t.row_sum(i) <= 1.0 + 1e-15);
        }
        assert!(matches!(equal_rates().truncate(1), Err(ChainError::TruncationTooSmall(1))));
    }

    #[test]
    fn oracle_small_powers() {
        let a = equal_rates();
        assert_eq!(oracle_transition(&a, 0, 0, 0), 1.0);
        assert_eq!(oracle_transition(&a, 0, 0, 1), 0.5);
        assert_relative_eq!(oracle_transition(&a, 0, 0, 2), 0.41, epsilon = 1e-15);
    }

    #[test]
    fn absorption() {
        let a = equal_rates();
        assert_relative_eq!(absorption_probability(&a, &[1.0], 1).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(absorption_probability(&a, &[0.0, 1.0], 1).unwrap(), 0.0);
        let c = reflecting();
        for n in [0, 1, 5, 40] {
            assert_eq!(absorption_probability(&c, &[1.0], n).unwrap(), 0.0);
        }
        assert!(absorption_probability(&a, &[0.5, 0.4], 1).is_err());
        assert!(absorption_probability(&a, &[1.5, -0.5], 1).is_err());
        assert!(absorption_probability(&a, &[], 1).is_err());
    }

    #[test]
    fn dense_matches_band_step() {
        let t = ChainParams::new(0.35, 0.4, 0.25).unwrap().truncate(7).unwrap();
        let dense = t.to_dense();
        let row: Vec<f64> = (0..7).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let mut out = vec![0.0; 7];
        t.step(&row, &mut out);
        for j in 0..7 {
            let expect: f64 = (0..7).map(|i| row[i] * dense[i][j]).sum();
            assert_relative_eq!(out[j], expect, epsilon = 1e-15);
        }
    }
}
