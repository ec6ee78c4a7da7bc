//! Gauss-Chebyshev quadrature on the cut and the spectral (Karlin-McGregor)
//! evaluation of transition probabilities:
//!
//! ```text
//! (P^n)[i][j] = pi_j ∫ x^n Q_i(x) Q_j(x) psi(dx).
//! ```
//!
//! Atoms of `psi` are added exactly; only the density is integrated
//! numerically.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::chain::{oracle_transition, ChainParams};
use crate::chebyshev::QSweep;
use crate::error::{ChainError, Result};
use crate::spectral::{density_denominator, SpectralMeasure};

/// Gauss-Legendre points per panel of the graded rule.
const PANEL_POINTS: usize = 16;
/// Panels narrower than this are never split further.
const MIN_PANEL: f64 = 1e-13;

/// Node count for measure summaries.
pub const DEFAULT_NODES: usize = 512;
/// Node count for the verification suites.
pub const VERIFY_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Weight `sqrt(4pq - x^2)`, nodes `2 sqrt(pq) cos(k π / (N + 1))`.
    Second,
    /// Weight `1 / sqrt(4pq - x^2)`, nodes `2 sqrt(pq) cos((2k - 1) π / 2N)`.
    First,
    /// Weight `sqrt(4pq - x^2)`, composite Gauss-Legendre in the angle
    /// `x = 2 sqrt(pq) cos θ` on panels graded toward the singularities of
    /// the density.
    Graded,
}

/// Gauss-Chebyshev rule scaled to the cut `[-2 sqrt(pq), 2 sqrt(pq)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `4pq - x_k^2` at each node, computed from the angle to avoid
    /// cancellation near the edges.
    pub edge_gap: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_k w_k g(x_k)`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)))
    }
}

/// Second-kind rule: `∫ g(x) sqrt(4pq - x^2) dx ≈ Σ_k w_k g(x_k)`, exact for
/// polynomial `g` of degree `<= 2N - 1`.
pub fn build_rule(params: &ChainParams, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(ChainError::NoNodes);
    }
    let e = params.cut_edge();
    let four_pq = 4.0 * params.p() * params.q();
    let h = PI / (n as f64 + 1.0);
    let mut rule = QuadratureRule {
        kind: RuleKind::Second,
        nodes: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        edge_gap: Vec::with_capacity(n),
    };
    for k in 1..=n {
        let (s, c) = (k as f64 * h).sin_cos();
        rule.nodes.push(e * c);
        rule.weights.push(four_pq * h * s * s);
        rule.edge_gap.push(four_pq * s * s);
    }
    Ok(rule)
}

/// First-kind rule: `∫ g(x) / sqrt(4pq - x^2) dx ≈ Σ_k w_k g(x_k)`.
pub fn build_rule_first_kind(params: &ChainParams, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(ChainError::NoNodes);
    }
    let e = params.cut_edge();
    let four_pq = 4.0 * params.p() * params.q();
    let w = PI / n as f64;
    let mut rule = QuadratureRule {
        kind: RuleKind::First,
        nodes: Vec::with_capacity(n),
        weights: vec![w; n],
        edge_gap: Vec::with_capacity(n),
    };
    for k in 1..=n {
        let theta = (2 * k - 1) as f64 * PI / (2 * n) as f64;
        let (s, c) = theta.sin_cos();
        rule.nodes.push(e * c);
        rule.edge_gap.push(four_pq * s * s);
    }
    Ok(rule)
}

/// Singularities of `1 / D(e cos θ)` in the angle plane, as the real part
/// clamped to `[0, π]` and the distance from the real axis. Roots of `D` at
/// the cut edges are skipped: they cancel against `sin^2 θ`.
fn angle_singularities(params: &ChainParams) -> Vec<(f64, f64)> {
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    let e = params.cut_edge();
    let aa = p - p0;
    let bb = -r0 * (2.0 * p - p0);
    let cc = p * r0 * r0 + p0 * p0 * q;
    let roots: Vec<Complex64> = if aa.abs() <= f64::EPSILON * bb.abs().max(cc) {
        if bb == 0.0 {
            Vec::new()
        } else {
            vec![Complex64::new(-cc / bb, 0.0)]
        }
    } else {
        let disc = Complex64::new(bb * bb - 4.0 * aa * cc, 0.0).sqrt();
        let t = -0.5 * (bb + if bb >= 0.0 { disc } else { -disc });
        if t.norm() == 0.0 {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            vec![t / aa, cc / t]
        }
    };
    roots
        .into_iter()
        .filter(|z| !(z.im == 0.0 && (z.re.abs() - e).abs() <= 4.0 * f64::EPSILON * e))
        .map(|z| {
            let theta = (z / e).acos();
            (theta.re.clamp(0.0, PI), theta.im.abs())
        })
        .collect()
}

/// Graded rule: `∫ g(x) sqrt(4pq - x^2) dx ≈ Σ_k w_k g(x_k)` with `N / 16`
/// Gauss-Legendre panels of 16 points in `θ`. Panels are bisected, widest
/// relative to the nearest singularity of the density first, so nearly
/// singular densities (a root of `D` close to the cut) are resolved with
/// the same node budget.
pub fn build_rule_graded(params: &ChainParams, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(ChainError::NoNodes);
    }
    let per_panel = n.min(PANEL_POINTS);
    let budget = (n / per_panel).max(1);
    let sing = angle_singularities(params);
    let priority = |a: f64, b: f64| {
        let width = b - a;
        if width < MIN_PANEL {
            return 0.0;
        }
        sing.iter()
            .map(|&(c, d)| {
                let dx = (a - c).max(c - b).max(0.0);
                width / dx.hypot(d)
            })
            .fold(width, f64::max)
    };
    let mut panels = vec![(0.0, PI)];
    while panels.len() < budget {
        let (k, _) = panels
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| (k, priority(a, b)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let (a, b) = panels[k];
        let mid = 0.5 * (a + b);
        panels[k] = (a, mid);
        panels.push((mid, b));
    }
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));

    let gl = GaussLegendre::new(NonZeroUsize::new(per_panel).expect("non-zero"));
    let e = params.cut_edge();
    let e2 = e * e;
    let total = panels.len() * per_panel;
    let mut rule = QuadratureRule {
        kind: RuleKind::Graded,
        nodes: Vec::with_capacity(total),
        weights: Vec::with_capacity(total),
        edge_gap: Vec::with_capacity(total),
    };
    for (a, b) in panels {
        let (half, centre) = (0.5 * (b - a), 0.5 * (a + b));
        for &(t, w) in gl.as_node_weight_pairs() {
            let (s, c) = (centre + half * t).sin_cos();
            let gap = e2 * s * s;
            rule.nodes.push(e * c);
            rule.weights.push(half * w * gap);
            rule.edge_gap.push(gap);
        }
    }
    Ok(rule)
}

fn neumaier_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Discretisation of `psi`: weighted nodes for the density plus the atoms.
///
/// The density is `(p0/2π) / D(x)` against the weight `sqrt(4pq - x^2)`,
/// integrated with [`build_rule_graded`]. In the angle variable the
/// integrand `sin^2 θ / D(e cos θ)` stays bounded when `D` vanishes at a cut
/// edge (the arcsine case `p = 1/2, p0 = 1, r0 = 0`).
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    measure: SpectralMeasure,
    /// `(x, weight)` for every node and every atom.
    points: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(measure: SpectralMeasure, n: usize) -> Result<Self> {
        let params = *measure.params();
        let rule = build_rule_graded(&params, n)?;
        let scale = params.p0() / (2.0 * PI);
        let mut points: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| (x, w * scale / density_denominator(&params, x)))
            .collect();
        points.extend(measure.masses().iter().map(|m| (m.x, m.w)));
        Ok(Self { measure, points })
    }

    pub fn for_params(params: ChainParams, n: usize) -> Result<Self> {
        Self::new(SpectralMeasure::new(params), n)
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    pub fn params(&self) -> &ChainParams {
        self.measure.params()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(self.points.iter().map(|&(x, w)| w * f(x)))
    }

    pub fn try_integrate<E>(&self, mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
        let mut terms = Vec::with_capacity(self.points.len());
        for &(x, w) in &self.points {
            terms.push(w * f(x)?);
        }
        Ok(neumaier_sum(terms.into_iter()))
    }

    /// `∫ x^n psi(dx)`.
    pub fn moment(&self, n: usize) -> f64 {
        self.integrate(|x| x.powi(n as i32))
    }

    /// `pi_j ∫ x^n Q_i Q_j dpsi`.
    pub fn transition(&self, i: usize, j: usize, n: usize) -> f64 {
        let params = *self.params();
        let top = i.max(j);
        let integral = self.integrate(|x| {
            let (mut qi, mut qj) = (0.0, 0.0);
            for (k, v) in QSweep::new(&params, x).take(top + 1).enumerate() {
                if k == i {
                    qi = v;
                }
                if k == j {
                    qj = v;
                }
            }
            x.powi(n as i32) * qi * qj
        });
        params.pi_weight(j) * integral
    }

    /// `G[i][j] = pi_j ∫ Q_i Q_j dpsi` for `i, j <= jmax`.
    pub fn gram(&self, jmax: usize) -> Vec<Vec<f64>> {
        let params = *self.params();
        let size = jmax + 1;
        let mut acc = vec![vec![Vec::with_capacity(self.points.len()); size]; size];
        for &(x, w) in &self.points {
            let qs: Vec<f64> = QSweep::new(&params, x).take(size).collect();
            for i in 0..size {
                for j in i..size {
                    acc[i][j].push(w * qs[i] * qs[j]);
                }
            }
        }
        let mut g = vec![vec![0.0; size]; size];
        for i in 0..size {
            for j in i..size {
                let integral = neumaier_sum(acc[i][j].drain(..));
                g[i][j] = params.pi_weight(j) * integral;
                g[j][i] = params.pi_weight(i) * integral;
            }
        }
        g
    }
}

/// `∫ f dpsi`: quadrature on the density plus exact atom contributions.
pub fn integrate_measure(measure: &SpectralMeasure, f: impl Fn(f64) -> f64, n: usize) -> Result<f64> {
    Ok(DiscreteMeasure::new(measure.clone(), n)?.integrate(f))
}

/// [`integrate_measure`] for a fallible integrand.
pub fn try_integrate_measure<E: From<ChainError>>(
    measure: &SpectralMeasure,
    f: impl FnMut(f64) -> Result<f64, E>,
    n: usize,
) -> Result<f64, E> {
    DiscreteMeasure::new(measure.clone(), n)?.try_integrate(f)
}

/// Spectral value of `(P^n)[i][j]` and, optionally, the exact oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionResult {
    pub spectral: f64,
    pub oracle: Option<f64>,
    pub abs_diff: Option<f64>,
}

pub fn km_transition(
    params: &ChainParams,
    i: usize,
    j: usize,
    n: usize,
    nodes: usize,
    with_oracle: bool,
) -> Result<TransitionResult> {
    let spectral = DiscreteMeasure::for_params(*params, nodes)?.transition(i, j, n);
    let oracle = with_oracle.then(|| oracle_transition(params, i, j, n));
    Ok(TransitionResult {
        spectral,
        oracle,
        abs_diff: oracle.map(|o| (spectral - o).abs()),
    })
}

pub fn gram_matrix(params: &ChainParams, jmax: usize, nodes: usize) -> Result<Vec<Vec<f64>>> {
    Ok(DiscreteMeasure::for_params(*params, nodes)?.gram(jmax))
}
