//! Chebyshev polynomials and the chain's eigenpolynomials `Q_j`.
//!
//! `Q_j` solves `P Q(x) = x Q(x)` with `Q_0 = 1`. It is available two ways:
//! the three-term recurrence read off the rows of the transition matrix
//! (the evaluator used everywhere else in the crate) and a closed form in
//! terms of `T_j` and `U_j` at the rescaled variable `x / (2 sqrt(pq))`,
//! kept as an independent check of the recurrence.
//!
//! At an atom of the spectral measure `Q_j` is the recessive solution of its
//! recurrence, so any f64 evaluation loses roughly `j log10(growth ratio)`
//! digits there. Both evaluators therefore run in double-double arithmetic
//! and round once at the end.

use crate::chain::ChainParams;
use crate::dd::Dd;

/// Chebyshev polynomial of the first kind, `T_{j+1} = 2t T_j - T_{j-1}`.
///
/// Valid for any real `t`, including `|t| > 1`.
pub fn cheb_t(j: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if j == 0 {
        return prev;
    }
    for _ in 1..j {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev polynomial of the second kind, with `U_{-1} = 0`.
///
/// # Panics
///
/// If `j < -1`.
pub fn cheb_u(j: i64, t: f64) -> f64 {
    assert!(j >= -1, "U_j is defined for j >= -1");
    let (mut prev, mut cur) = (0.0, 1.0);
    if j == -1 {
        return prev;
    }
    for _ in 0..j {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `(p, 1 - p)` with the complement exact, so `p + q = 1` holds without
/// rounding. The all-ones vector solves the recurrence at `x = 1` and is its
/// recessive solution when `p < 1/2`, so even an ulp of drift is amplified
/// by `(q/p)^j`.
fn exact_rates(params: &ChainParams) -> (Dd, Dd) {
    let p = Dd::new(params.p());
    (p, Dd::ONE - p)
}

/// `1 - r0 - p0` in double-double, zero for conservative chains.
fn lost_mass(params: &ChainParams) -> Dd {
    if params.is_conservative() {
        Dd::ZERO
    } else {
        Dd::ONE - Dd::new(params.r0()) - Dd::new(params.p0())
    }
}

/// Values `Q_0(x), ..., Q_jmax(x)` at one spectral point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyEval {
    pub x: f64,
    /// `x / (2 sqrt(pq))`
    pub xstar: f64,
    pub values: Vec<f64>,
}

impl PolyEval {
    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }
}

pub fn rescaled(params: &ChainParams, x: f64) -> f64 {
    x / params.cut_edge()
}

const RESCALE_UP: f64 = 1e120;
const RESCALE_DOWN: f64 = 1e-120;
// 2^400 and 2^-400: exact power-of-two rescaling keeps double-double exact.
const POW2_400: f64 = f64::from_bits((1023 + 400) << 52);
const POW2_M400: f64 = f64::from_bits((1023 - 400) << 52);

fn apply_pow2(mut value: f64, mut exp400: i32) -> f64 {
    while exp400 > 0 && value.is_finite() && value != 0.0 {
        value *= POW2_400;
        exp400 -= 1;
    }
    while exp400 < 0 && value != 0.0 {
        value *= POW2_M400;
        exp400 += 1;
    }
    value
}

/// `Q_j(x)` by the Chebyshev closed form
///
/// ```text
/// Q_j(x) = (q/p)^(j/2) [ 2(p0-p)/p0 T_j(x*) + (2p-p0)/p0 U_j(x*)
///                        - r0/p0 sqrt(p/q) U_{j-1}(x*) ],  x* = x / (2 sqrt(pq)).
/// ```
///
/// Magnitudes are tracked with a separate power-of-two exponent, so the
/// `(q/p)^(j/2)` factor and the Chebyshev growth off the cut cannot overflow
/// in isolation.
pub fn q_poly_closed(params: &ChainParams, j: usize, x: f64) -> f64 {
    let (p, q) = exact_rates(params);
    let p0 = Dd::new(params.p0());
    let r0 = Dd::ONE - p0 - lost_mass(params);
    let two = Dd::new(2.0);
    let xs = Dd::new(x) / (two * (p * q).sqrt());

    // (T_j, U_j, U_{j-1}) sharing the scale 2^(400 * exp).
    let mut exp = 0i32;
    let (mut t_prev, mut t_cur) = (Dd::ONE, xs);
    let (mut u_prev, mut u_cur) = (Dd::ZERO, Dd::ONE);
    let t_j;
    if j == 0 {
        t_j = Dd::ONE;
    } else {
        for _ in 1..j {
            let t_next = two * xs * t_cur - t_prev;
            t_prev = t_cur;
            t_cur = t_next;
            let u_next = two * xs * u_cur - u_prev;
            u_prev = u_cur;
            u_cur = u_next;
            if t_cur.abs().hi() > RESCALE_UP || u_cur.abs().hi() > RESCALE_UP {
                t_prev = t_prev.scale(POW2_M400);
                t_cur = t_cur.scale(POW2_M400);
                u_prev = u_prev.scale(POW2_M400);
                u_cur = u_cur.scale(POW2_M400);
                exp += 1;
            }
        }
        t_j = t_cur;
        // One more U step: the loop leaves (U_{j-2}, U_{j-1}).
        let u_next = two * xs * u_cur - u_prev;
        u_prev = u_cur;
        u_cur = u_next;
    }
    let (u_j, u_jm1) = (u_cur, u_prev);

    let c_t = two * (p0 - p) / p0;
    let c_u = (two * p - p0) / p0;
    let c_um1 = r0 / p0 * (p / q).sqrt();
    let bracket = c_t * t_j + c_u * u_j - c_um1 * u_jm1;

    let ratio = (q / p).sqrt();
    let mut factor = Dd::ONE;
    for _ in 0..j {
        factor = factor * ratio;
        let mag = factor.abs().hi();
        if mag > RESCALE_UP {
            factor = factor.scale(POW2_M400);
            exp += 1;
        } else if mag < RESCALE_DOWN {
            factor = factor.scale(POW2_400);
            exp -= 1;
        }
    }
    apply_pow2((bracket * factor).to_f64(), exp)
}

/// `Q_0(x), ..., Q_jmax(x)` by the recurrence `Q_1 = (x - r0)/p0`,
/// `Q_{j+1} = (x Q_j - q Q_{j-1}) / p`.
pub fn q_poly_recurrence(params: &ChainParams, jmax: usize, x: f64) -> PolyEval {
    let mut values = Vec::with_capacity(jmax + 1);
    let mut sweep = QSweep::new(params, x);
    for _ in 0..=jmax {
        values.push(sweep.next_value());
    }
    PolyEval {
        x,
        xstar: rescaled(params, x),
        values,
    }
}

/// Single value `Q_j(x)` by the recurrence.
pub fn q_poly(params: &ChainParams, j: usize, x: f64) -> f64 {
    let mut sweep = QSweep::new(params, x);
    let mut v = 1.0;
    for _ in 0..=j {
        v = sweep.next_value();
    }
    v
}

/// Streaming recurrence evaluator yielding `Q_0(x), Q_1(x), ...` in turn.
#[derive(Debug, Clone)]
pub struct QSweep {
    x: Dd,
    p: Dd,
    q: Dd,
    prev: Dd,
    cur: Dd,
    index: usize,
    q1: Dd,
}

impl QSweep {
    pub fn new(params: &ChainParams, x: f64) -> Self {
        let xd = Dd::new(x);
        let (p, q) = exact_rates(params);
        let p0 = Dd::new(params.p0());
        // Q_1 = (x - r0) / p0 = 1 + (x - 1 + q0) / p0, written so that the
        // all-ones vector is reproduced exactly at x = 1 when q0 = 0.
        let q1 = Dd::ONE + (xd - Dd::ONE + lost_mass(params)) / p0;
        Self {
            x: xd,
            p,
            q,
            prev: Dd::ZERO,
            cur: Dd::ONE,
            index: 0,
            q1,
        }
    }

    /// Returns the next polynomial value, starting with `Q_0`.
    pub fn next_value(&mut self) -> f64 {
        let out = match self.index {
            0 => Dd::ONE,
            1 => {
                self.prev = Dd::ONE;
                self.cur = self.q1;
                self.cur
            }
            _ => {
                let next = (self.x * self.cur - self.q * self.prev) / self.p;
                self.prev = self.cur;
                self.cur = next;
                next
            }
        };
        self.index += 1;
        out.to_f64()
    }
}

impl Iterator for QSweep {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(self.next_value())
    }
}
