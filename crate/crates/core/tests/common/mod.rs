//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use kmchain::ChainParams;

pub const FIXTURES: [(&str, f64, f64, f64); 5] = [
    ("equal-rates", 0.2, 0.2, 0.5),
    ("two-atoms", 0.2, 0.6, 0.1),
    ("reflecting", 0.5, 1.0, 0.0),
    ("upward-drift", 0.85, 0.3, 0.6),
    ("positive-recurrent", 0.3, 0.6, 0.4),
];

pub fn fixture(name: &str) -> ChainParams {
    let (_, p, p0, r0) = FIXTURES.iter().find(|f| f.0 == name).copied().expect("known fixture");
    ChainParams::new(p, p0, r0).unwrap()
}

pub fn fixtures() -> Vec<(&'static str, ChainParams)> {
    FIXTURES
        .iter()
        .map(|&(n, p, p0, r0)| (n, ChainParams::new(p, p0, r0).unwrap()))
        .collect()
}

/// Dense matrix power `P^n` of the `size x size` section, by repeated
/// full matrix multiplication.
pub fn dense_power(params: &ChainParams, size: usize, n: usize) -> Vec<Vec<f64>> {
    let mat: Vec<Vec<f64>> = (0..size)
        .map(|i| (0..size).map(|j| params.entry(i, j)).collect())
        .collect();
    let mut acc: Vec<Vec<f64>> = (0..size)
        .map(|i| (0..size).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _ in 0..n {
        let mut next = vec![vec![0.0; size]; size];
        for i in 0..size {
            for k in 0..size {
                if acc[i][k] == 0.0 {
                    continue;
                }
                for j in 0..size {
                    next[i][j] += acc[i][k] * mat[k][j];
                }
            }
        }
        acc = next;
    }
    acc
}

/// `g(x) = x - r0 + (p0/2p)(-x + sqrt(x^2 - 4pq))` for real `x` off the
/// cut; `m = -1/g`, so its zeros are the poles of `m`.
fn unrationalised(params: &ChainParams, x: f64) -> f64 {
    let (p, q, p0, r0) = (params.p(), params.q(), params.p0(), params.r0());
    let s = (x * x - 4.0 * p * q).max(0.0).sqrt().copysign(x);
    x - r0 + p0 / (2.0 * p) * (-x + s)
}

fn unrationalised_slope(params: &ChainParams, x: f64) -> f64 {
    let (p, q, p0) = (params.p(), params.q(), params.p0());
    let s = (x * x - 4.0 * p * q).max(0.0).sqrt().copysign(x);
    1.0 - p0 / (2.0 * p) + p0 / (2.0 * p) * x / s
}

/// Atoms located by bisection on the zeros of `g` in `[-1, -e) ∪ (e, 1]`,
/// with weight `1 / g'(x)` (the negative residue of `-1/g`). Does not use
/// the rationalised denominator at all.
pub fn residue_oracle(params: &ChainParams) -> Vec<(f64, f64)> {
    let e = params.cut_edge();
    let mut atoms = Vec::new();
    for (lo, hi) in [(-1.0, -e), (e, 1.0)] {
        if hi - lo <= 0.0 {
            continue;
        }
        let steps = 20_000;
        let xs: Vec<f64> = (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .collect();
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ga, gb) = (unrationalised(params, a), unrationalised(params, b));
            // Roots at the ends of [-1, 1] (recurrent chains) show up as exact
            // or near-exact zeros.
            if (a == -1.0 && ga.abs() < 1e-13) || (b == 1.0 && gb.abs() < 1e-13) {
                let x = if a == -1.0 && ga.abs() < 1e-13 { a } else { b };
                atoms.push(x);
                continue;
            }
            if ga == 0.0 {
                atoms.push(a);
            } else if ga.signum() != gb.signum() && gb != 0.0 {
                let (mut l, mut r) = (a, b);
                for _ in 0..200 {
                    let m = 0.5 * (l + r);
                    if unrationalised(params, m).signum() == ga.signum() {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                atoms.push(0.5 * (l + r));
            }
        }
    }
    atoms.sort_by(f64::total_cmp);
    atoms.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    atoms
        .into_iter()
        .map(|x| (x, 1.0 / unrationalised_slope(params, x)))
        .filter(|&(x, w)| w > 1e-12 && x.abs() > e)
        .collect()
}
