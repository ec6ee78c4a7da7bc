//! The orthogonality measure `psi` of the chain.
//!
//! Its Stieltjes transform `m(z) = ∫ psi(dx) / (x - z)` is
//!
//! ```text
//!          r0 - (1 - p0/2p) z + (p0/2p) sqrt(z^2 - 4pq)
//! m(z) = --------------------------------------------------------------
//!        (1 - p0/p) z^2 - 2 r0 (1 - p0/2p) z + r0^2 + p0^2 q / p
//! ```
//!
//! with the square root positive on the real axis right of the cut
//! `[-2 sqrt(pq), 2 sqrt(pq)]` and negative left of it. The continuous
//! part of `psi` comes from the jump of `m` across the cut; each pole off
//! the cut carries an atom whose weight is the negative residue. Roots of
//! the rationalised denominator that are not poles of `m` (the numerator
//! vanishes there too) carry no mass.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chain::ChainParams;
use crate::error::{ChainError, Result};

/// `|p0 - p|` below which the denominator is treated as linear.
pub const EQUAL_RATE_TOL: f64 = 1e-12;
/// Distance to a classification line below which a point is flagged.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Residues at or below this are rounding noise, not atoms.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Roots this many ulps from the cut edge are treated as on it.
const EDGE_ULPS: f64 = 8.0;
/// Atoms of a substochastic chain lie in `[-1, 1]`; roots beyond this slack
/// are spurious.
const SUPPORT_SLACK: f64 = 1e-9;

/// Coefficients of `m(z)` in its rationalised form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesM {
    params: ChainParams,
    /// Numerator `n0 + n1 z + ns sqrt(z^2 - 4pq)`.
    pub n0: f64,
    pub n1: f64,
    pub ns: f64,
    /// Denominator `a z^2 + b z + c`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl StieltjesM {
    pub fn new(params: ChainParams) -> Self {
        let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
        let half = p0 / (2.0 * p);
        Self {
            params,
            n0: r0,
            n1: -(1.0 - half),
            ns: half,
            a: 1.0 - p0 / p,
            b: -2.0 * r0 * (1.0 - half),
            c: r0 * r0 + p0 * p0 * q / p,
        }
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// Rationalised numerator. Rearranged as
    /// `r0 - (1 - p0/p) z - 2 p0 q / (z + sqrt(z^2 - 4pq))`, which is
    /// algebraically identical but free of cancellation for large `|z|`.
    pub fn numerator(&self, z: Complex64) -> Complex64 {
        let s = branch_sqrt(&self.params, z);
        let (p, q, p0) = (self.params.p(), self.params.q(), self.params.p0());
        Complex64::new(self.n0, 0.0) - z * (1.0 - p0 / p) - 2.0 * p0 * q / (z + s)
    }

    pub fn denominator(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) * z + self.c
    }

    pub fn denominator_derivative(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    /// `z - r0 + q p0 n(z)`; `m = -1 / g` and the poles of `m` are its zeros.
    pub fn unrationalised(&self, z: Complex64) -> Complex64 {
        let (q, p0, r0) = (self.params.q(), self.params.p0(), self.params.r0());
        z - r0 + q * p0 * n_unchecked(&self.params, z)
    }
}

/// `sqrt(z^2 - 4pq)` on the branch analytic off the cut that behaves like
/// `z` at infinity. On the cut itself it returns the limit from above.
pub fn branch_sqrt(params: &ChainParams, z: Complex64) -> Complex64 {
    let e = params.cut_edge();
    (z - e).sqrt() * (z + e).sqrt()
}

fn real_branch_sqrt(params: &ChainParams, x: f64) -> f64 {
    let e = params.cut_edge();
    let ax = x.abs();
    let mag = ((ax - e).max(0.0) * (ax + e)).sqrt();
    if x < 0.0 {
        -mag
    } else {
        mag
    }
}

fn on_cut(params: &ChainParams, z: Complex64) -> bool {
    z.im == 0.0 && z.re.abs() <= params.cut_edge()
}

fn n_unchecked(params: &ChainParams, z: Complex64) -> Complex64 {
    // (-z + s) / (2pq) = -2 / (z + s)
    -2.0 / (z + branch_sqrt(params, z))
}

/// Stieltjes transform `n(z) = (-z + sqrt(z^2 - 4pq)) / (2pq)` of the
/// chopped chain (state 0 deleted).
pub fn stieltjes_n(params: &ChainParams, z: Complex64) -> Result<Complex64> {
    if on_cut(params, z) {
        return Err(ChainError::OnCut(z, params.cut_edge()));
    }
    Ok(n_unchecked(params, z))
}

const POLE_TOL: f64 = 1e-13;

/// Stieltjes transform `m(z)` of the spectral measure.
pub fn stieltjes_m(params: &ChainParams, z: Complex64) -> Result<Complex64> {
    if on_cut(params, z) {
        return Err(ChainError::OnCut(z, params.cut_edge()));
    }
    let sm = StieltjesM::new(*params);
    let g = sm.unrationalised(z);
    if g.norm() <= POLE_TOL * (1.0 + z.norm()) {
        return Err(ChainError::Pole(z));
    }
    let d = sm.denominator(z);
    if d.norm() <= 1e-8 * (1.0 + z.norm_sqr()) {
        // Removable singularity of the rationalised form.
        return Ok(-1.0 / g);
    }
    Ok(sm.numerator(z) / d)
}

/// `(p - p0) x^2 - r0 (2p - p0) x + p r0^2 + p0^2 q`, the denominator of the
/// continuous density. Strictly positive inside the cut.
pub fn density_denominator(params: &ChainParams, x: f64) -> f64 {
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    ((p - p0) * x - r0 * (2.0 * p - p0)) * x + p * r0 * r0 + p0 * p0 * q
}

/// Density of the continuous part of `psi`,
/// `(p0 / 2π) sqrt(4pq - x^2) / density_denominator(x)` on the cut.
pub fn density_at(params: &ChainParams, x: f64) -> Result<f64> {
    let e = params.cut_edge();
    let ax = x.abs();
    if ax.is_nan() || ax > e {
        return Err(ChainError::OffCut { x, edge: e });
    }
    let gap = (e - ax) * (e + ax);
    if gap <= 0.0 {
        return Ok(0.0);
    }
    Ok(params.p0() / (2.0 * PI) * gap.sqrt() / density_denominator(params, x))
}

/// Real zeros of the rationalised denominator of `m`, in increasing order.
pub fn denominator_roots(params: &ChainParams) -> Vec<f64> {
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    if (p0 - p).abs() <= EQUAL_RATE_TOL {
        return if r0 > 0.0 {
            vec![r0 + p * q / r0]
        } else {
            Vec::new()
        };
    }
    let disc = r0 * r0 - 4.0 * q * (p - p0);
    if disc < 0.0 {
        return Vec::new();
    }
    // (p - p0) x^2 + bb x + cc, whose discriminant is p0^2 * disc.
    let aa = p - p0;
    let bb = -r0 * (2.0 * p - p0);
    let cc = p * r0 * r0 + p0 * p0 * q;
    let root_disc = p0 * disc.sqrt();
    let t = -0.5 * (bb + root_disc.copysign(bb));
    let mut roots = if t == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![t / aa, cc / t]
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// An atom of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPoint {
    pub x: f64,
    /// Weight: the negative residue of `m` at `x`.
    pub w: f64,
    /// The closed-form bracket
    /// `(q p0^2 / (p |x - r0|) - |x - r0|)_+ / sqrt(r0^2 - 4q(p - p0))`.
    /// It equals `(p0 / p) * w`, so it coincides with `w` only when `p0 = p`.
    pub w_bracket: f64,
}

/// `(q p0^2 / (p |x - r0|) - |x - r0|)_+ / sqrt(r0^2 - 4q(p - p0))`.
pub fn bracket_weight(params: &ChainParams, x: f64) -> f64 {
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    let disc = r0 * r0 - 4.0 * q * (p - p0);
    if disc <= 0.0 {
        return 0.0;
    }
    let d = (x - r0).abs();
    if d == 0.0 {
        return 0.0;
    }
    ((q * p0 * p0 / (p * d) - d).max(0.0)) / disc.sqrt()
}

/// Negative residue of `m` at a real root `x` of its denominator off the
/// cut; zero at roots that are not poles.
///
/// Evaluated as `(p / p0)` times the unclamped bracket, which equals
/// `-N(x) / D'(x)` at poles but, unlike it, does not pass through
/// `sqrt(x^2 - 4pq)`. It stays accurate to rounding when the root sits on
/// the cut edge, where the weight vanishes.
pub fn residue_weight(params: &ChainParams, x: f64) -> f64 {
    if !is_pole(params, x) {
        return 0.0;
    }
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    let disc = r0 * r0 - 4.0 * q * (p - p0);
    let d = (x - r0).abs();
    if disc <= 0.0 || d == 0.0 {
        return residue_weight_direct(params, x);
    }
    p / p0 * (q * p0 * p0 / (p * d) - d) / disc.sqrt()
}

/// `-N(x) / D'(x)` evaluated directly from the rationalised numerator.
pub fn residue_weight_direct(params: &ChainParams, x: f64) -> f64 {
    let sm = StieltjesM::new(*params);
    let s = real_branch_sqrt(params, x);
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    let numer = if x + s == 0.0 {
        0.0
    } else {
        r0 - (1.0 - p0 / p) * x - 2.0 * p0 * q / (x + s)
    };
    let slope = sm.denominator_derivative(x);
    if slope == 0.0 {
        // Double root: a Stieltjes transform has only simple poles, so the
        // numerator vanishes here as well.
        return 0.0;
    }
    -numer / slope
}

/// Whether a real root `x` of the denominator off the cut is a pole of `m`
/// on the principal sheet. At any root `x (1 - p0/2p) - r0 = ∓(p0/2p) s`;
/// poles take the sign opposite to `s`, which has the sign of `x`.
pub fn is_pole(params: &ChainParams, x: f64) -> bool {
    let (p, p0, r0) = (params.p(), params.p0(), params.r0());
    (x * (1.0 - p0 / (2.0 * p)) - r0) * x.signum() < 0.0
}

/// Atoms of `psi`: poles of `m` outside the closed cut with positive
/// negative-residue.
pub fn point_masses(params: &ChainParams) -> Vec<MassPoint> {
    let e = params.cut_edge();
    // Roots within a few ulps of the edge are the edge itself, where the
    // residue vanishes.
    let edge = e + EDGE_ULPS * f64::EPSILON * e.max(f64::MIN_POSITIVE);
    denominator_roots(params)
        .into_iter()
        .filter(|&x| x.abs() > edge && x.abs() <= 1.0 + SUPPORT_SLACK)
        .filter_map(|x| {
            let w = residue_weight(params, x);
            (w > WEIGHT_FLOOR).then(|| MassPoint {
                x,
                w,
                w_bracket: bracket_weight(params, x),
            })
        })
        .collect()
}

/// The full orthogonality measure: density on the cut plus atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    params: ChainParams,
    masses: Vec<MassPoint>,
    eta: f64,
}

impl SpectralMeasure {
    pub fn new(params: ChainParams) -> Self {
        let masses = point_masses(&params);
        let eta = masses
            .iter()
            .map(|m| m.x)
            .fold(params.cut_edge(), f64::max);
        Self {
            params,
            masses,
            eta,
        }
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn masses(&self) -> &[MassPoint] {
        &self.masses
    }

    pub fn mass_weight_total(&self) -> f64 {
        self.masses.iter().map(|m| m.w).sum()
    }

    /// Supremum of the support.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cut_edge(&self) -> f64 {
        self.params.cut_edge()
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        density_at(&self.params, x)
    }
}

/// Supremum of the support of `psi`: the cut edge or the rightmost atom.
pub fn support_sup_eta(measure: &SpectralMeasure) -> f64 {
    measure.eta()
}

/// Atom count of a parameter point, read from the closed-form inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionClass {
    pub count: u8,
    /// Within [`BOUNDARY_TOL`] of a line where the count changes.
    pub boundary: bool,
    pub recurrent: bool,
    pub positive_recurrent: bool,
}

/// Classifies `(p, p0, r0)` by the number of atoms of `psi`.
///
/// With `s = sqrt(p/q)`: two atoms iff `p < 1/2` and `p0 > 2p + s r0`; one
/// atom iff `p < 1/2` and `2p - s r0 < p0 <= 2p + s r0`, or `p > 1/2`,
/// `p0 > 2p - s r0` and `r0 > sqrt(pq)`; none otherwise.
pub fn classify_region(params: &ChainParams) -> RegionClass {
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    let slope = (p / q).sqrt();
    let lower = 2.0 * p - slope * r0;
    let upper = 2.0 * p + slope * r0;
    let r0_line = (p * q).sqrt();

    let count = if (p0 - p).abs() <= EQUAL_RATE_TOL {
        u8::from(p < 0.5 && r0 > r0_line && r0 <= 1.0 - p)
    } else if p < 0.5 {
        if p0 > upper {
            2
        } else if p0 > lower {
            1
        } else {
            0
        }
    } else if p > 0.5 {
        u8::from(p0 > lower && r0 > r0_line)
    } else {
        0
    };

    let boundary = (p0 - lower).abs() <= BOUNDARY_TOL
        || (p0 - upper).abs() <= BOUNDARY_TOL
        || (r0 - r0_line).abs() <= BOUNDARY_TOL
        || (p - 0.5).abs() <= BOUNDARY_TOL;

    let recurrent = params.is_conservative() && p <= 0.5;
    RegionClass {
        count,
        boundary,
        recurrent,
        positive_recurrent: recurrent && p < 0.5,
    }
}
