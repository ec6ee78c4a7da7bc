//! Self-verification suite: every spectral quantity is checked against an
//! independent route (matrix powers, the other polynomial evaluator, or an
//! exact identity) for a single parameter point.

use crate::asymptotics::{qsd_alpha, qsd_exists, QsdExistence};
use crate::chain::{evolve_distribution, oracle_row, ChainParams};
use crate::chebyshev::{q_poly_closed, q_poly_recurrence};
use crate::error::Result;
use crate::quadrature::{DiscreteMeasure, VERIFY_NODES};
use crate::spectral::{classify_region, density_at, SpectralMeasure};

/// Outcome of one named check. `max_err` is the worst deviation observed,
/// `tol` the threshold it was held to.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub max_err: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, max_err: f64, tol: f64) {
        self.checks.push(Check {
            name,
            pass: max_err <= tol,
            max_err,
            tol,
        });
    }
}

/// Spectral points used for the polynomial checks: ten on the cut, ten off
/// it (including the ends of `[-1, 1]`), plus every atom.
pub fn polynomial_sample_points(measure: &SpectralMeasure) -> Vec<f64> {
    let e = measure.cut_edge();
    let mut xs: Vec<f64> = (0..10)
        .map(|k| e * (std::f64::consts::PI * (k as f64 + 0.5) / 10.0).cos())
        .collect();
    for k in 1..=5 {
        let x = e + (1.0 - e) * k as f64 / 5.0;
        xs.push(x);
        xs.push(-x);
    }
    xs.extend(measure.masses().iter().map(|m| m.x));
    xs
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Runs the full invariant suite for one chain.
pub fn verify(params: &ChainParams) -> Result<VerifyReport> {
    let mut report = VerifyReport { checks: Vec::new() };
    let measure = SpectralMeasure::new(*params);
    let disc = DiscreteMeasure::new(measure.clone(), VERIFY_NODES)?;
    let e = params.cut_edge();

    let balance = (0..50)
        .map(|i| {
            let lhs = params.pi_weight(i) * params.entry(i, i + 1);
            let rhs = params.pi_weight(i + 1) * params.entry(i + 1, i);
            (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    report.push("detailed_balance", balance, 1e-14);

    report.push("total_mass", (disc.integrate(|_| 1.0) - 1.0).abs(), 1e-10);

    let density_min = (0..=400)
        .map(|k| density_at(params, -e + 2.0 * e * k as f64 / 400.0).unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    report.push("density_nonnegative", (-density_min).max(0.0), 0.0);

    let interior = measure
        .masses()
        .iter()
        .map(|m| (e - m.x.abs() - 1e-12).max(0.0))
        .fold(0.0, f64::max);
    report.push("masses_outside_cut", interior, 0.0);

    let class = classify_region(params);
    report.push(
        "classification_matches_masses",
        f64::from(class.count).sub_abs(measure.masses().len() as f64),
        0.0,
    );

    let row0 = oracle_row(params, 0, 30);
    let moments = (0..=30)
        .map(|n| {
            let exact = oracle_row(params, 0, n)[0];
            (disc.moment(n) - exact).abs()
        })
        .fold(0.0, f64::max);
    debug_assert_eq!(row0.len(), 31);
    report.push("moment_identity", moments, 1e-8);

    let mut km = 0.0f64;
    for i in 0..=8 {
        for n in [0, 1, 2, 5, 11, 20] {
            let row = oracle_row(params, i, n);
            for j in 0..=8 {
                let exact = row.get(j).copied().unwrap_or(0.0);
                km = km.max((disc.transition(i, j, n) - exact).abs());
            }
        }
    }
    report.push("km_matches_oracle", km, 1e-8);

    let gram = disc.gram(10);
    let ortho = gram
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        })
        .fold(0.0, f64::max);
    report.push("orthonormality", ortho, 1e-8);

    let mut closed = 0.0f64;
    let mut eigen = 0.0f64;
    let (p, q) = (params.p(), params.q());
    for x in polynomial_sample_points(&measure) {
        let rec = q_poly_recurrence(params, 51, x);
        for j in 0..=50 {
            closed = closed.max(rel(q_poly_closed(params, j, x), rec.values[j]));
            if j >= 1 {
                let terms = [q * rec.values[j - 1], p * rec.values[j + 1], x * rec.values[j]];
                let scale = terms.iter().map(|t| t.abs()).fold(f64::MIN_POSITIVE, f64::max);
                eigen = eigen.max((terms[0] + terms[1] - terms[2]).abs() / scale);
            }
        }
    }
    report.push("closed_form_matches_recurrence", closed, 1e-10);
    report.push("eigenvector_property", eigen, 1e-12);

    if params.is_conservative() {
        let ones = q_poly_recurrence(params, 50, 1.0)
            .values
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        report.push("recurrent_polynomials_equal_one", ones, 1e-12);
    }

    if class.positive_recurrent {
        let pi_sum = 1.0 + params.p0() / (params.q() - params.p());
        let at_one = measure
            .masses()
            .iter()
            .find(|m| (m.x - 1.0).abs() < 1e-12)
            .map_or(f64::INFINITY, |m| (m.w - 1.0 / pi_sum).abs());
        report.push("mass_at_one_equals_inverse_pi_sum", at_one, 1e-10);
    }

    if let Ok(QsdExistence::Family { eta }) = qsd_exists(params) {
        let x = 0.5 * (eta + 1.0);
        let dist = qsd_alpha(params, x, 1e-12)?;
        report.push("qsd_normalised", (dist.total() - 1.0).abs(), 1e-8);
        let negative = dist.alpha.iter().map(|a| (-a).max(0.0)).fold(0.0, f64::max);
        report.push("qsd_nonnegative", negative, 0.0);

        let evolved = evolve_distribution(params, &renormalised(&dist.alpha), 1)?;
        let survive = 1.0 - evolved.absorbed;
        let scale = dist.total();
        let mut left = 0.0f64;
        let mut conditional = 0.0f64;
        for j in 0..dist.jcut.saturating_sub(1) {
            let step = evolved.distribution[j] * scale;
            left = left.max((step - x * dist.alpha[j]).abs());
            conditional = conditional.max((evolved.distribution[j] / survive - dist.alpha[j] / scale).abs());
        }
        report.push("qsd_left_eigenvector", left, 1e-10);
        report.push("qsd_conditional_invariance", conditional, 1e-8);
    }

    Ok(report)
}

fn renormalised(alpha: &[f64]) -> Vec<f64> {
    let total: f64 = alpha.iter().sum();
    alpha.iter().map(|a| a / total).collect()
}

trait SubAbs {
    fn sub_abs(self, other: f64) -> f64;
}

impl SubAbs for f64 {
    fn sub_abs(self, other: f64) -> f64 {
        (self - other).abs()
    }
}
