//! Localized Gagliardo-Nirenberg inequality
//! `int u^3 eta^6 <= (9(1+delta)/16pi) int|grad u|^2 eta^6 int_{supp eta} u
//!                  + (C/delta^5) |grad eta|_inf^6 (int_{supp eta} u)^3 |supp eta|`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solver::Field;

/// Constant of the lower-order term, from [`search_c_star`] over 400 fields
/// (seed 1, `delta = 0.5`) rounded up by about 30%.
pub const FROZEN_C_STAR: f64 = 2.0e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevResult {
    pub lhs: f64,
    /// Gradient term of the right side.
    pub first: f64,
    /// Lower-order term of the right side.
    pub second: f64,
    pub rhs: f64,
    pub pass: bool,
}

fn gradient_sq(f: &Field, k: usize) -> f64 {
    let (i, j) = (k % f.nx, k / f.nx);
    let d = |lo: usize, hi: usize, span: f64| (f.values[hi] - f.values[lo]) / span;
    let gx = match (i > 0, i + 1 < f.nx) {
        (true, true) => d(k - 1, k + 1, 2.0 * f.hx),
        (false, true) => d(k, k + 1, f.hx),
        (true, false) => d(k - 1, k, f.hx),
        _ => 0.0,
    };
    let gy = match (j > 0, j + 1 < f.ny) {
        (true, true) => d(k - f.nx, k + f.nx, 2.0 * f.hy),
        (false, true) => d(k, k + f.nx, f.hy),
        (true, false) => d(k - f.nx, k, f.hy),
        _ => 0.0,
    };
    gx * gx + gy * gy
}

/// Terms of the inequality with lower-order constant `c`.
fn terms(u: &Field, eta: &Field, delta: f64) -> (f64, f64, f64) {
    let a = u.cell_area();
    let mut lhs = 0.0;
    let mut grad = 0.0;
    let mut mass = 0.0;
    let mut supp = 0.0;
    let mut eta_grad = 0.0f64;
    for k in 0..u.values.len() {
        let e = eta.values[k];
        let e6 = e.powi(6);
        lhs += u.values[k].powi(3) * e6 * a;
        grad += gradient_sq(u, k) * e6 * a;
        if e > 0.0 {
            mass += u.values[k] * a;
            supp += a;
        }
        eta_grad = eta_grad.max(gradient_sq(eta, k).sqrt());
    }
    let first = 9.0 * (1.0 + delta) / (16.0 * PI) * grad * mass;
    let unit_second = eta_grad.powi(6) * mass.powi(3) * supp / delta.powi(5);
    (lhs, first, unit_second)
}

pub fn sobolev_check(u: &Field, eta: &Field, delta: f64, c: f64) -> SobolevResult {
    let (lhs, first, unit) = terms(u, eta, delta);
    let second = c * unit;
    let rhs = first + second;
    SobolevResult { lhs, first, second, rhs, pass: lhs <= rhs }
}

/// Smooth cutoff: one on `|x - c| <= r1`, quintic smoothstep to zero at `r2`.
pub fn cutoff_eta(n: usize, width: f64, c: [f64; 2], r1: f64, r2: f64) -> Field {
    Field::from_fn(n, n, width, width, |p| {
        let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        if r <= r1 {
            1.0
        } else if r >= r2 {
            0.0
        } else {
            let s = (r - r1) / (r2 - r1);
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    })
}

/// Seeded nonnegative fields `g (sum_k a_k cos(k . x + phase_k))^2 + b` with
/// wave numbers up to four on the unit square. The gain `g` spans several
/// decades so that nearly flat fields, which only the lower-order term
/// controls, are represented.
pub fn band_limited_family(count: usize, seed: u64, n: usize) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let modes: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    let kx = rng.gen_range(0..=4) as f64;
                    let ky = rng.gen_range(0..=4) as f64;
                    (2.0 * PI * kx, 2.0 * PI * ky, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            let gain = 10f64.powf(rng.gen_range(-3.0..0.0));
            let floor = rng.gen_range(0.0..1.0);
            Field::from_fn(n, n, 1.0, 1.0, |p| {
                let s: f64 = modes.iter().map(|&(kx, ky, a, ph)| a * (kx * p[0] + ky * p[1] + ph).cos()).sum();
                gain * s * s + floor
            })
        })
        .collect()
}

/// Brute-force lower-order constant: `max (lhs - first) / unit` over the
/// family, floored at zero.
pub fn search_c_star(fields: &[Field], eta: &Field, delta: f64) -> f64 {
    fields
        .iter()
        .map(|u| {
            let (lhs, first, unit) = terms(u, eta, delta);
            if unit > 0.0 {
                (lhs - first) / unit
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// `lhs / first` for a Gaussian of width `w` centered where `eta = 1`.
pub fn sobolev_ratio_probe(n: usize, w: f64, delta: f64) -> f64 {
    let eta = cutoff_eta(n, 1.0, [0.5, 0.5], 0.25, 0.45);
    let u = Field::from_fn(n, n, 1.0, 1.0, |p| (-((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)) / (w * w)).exp());
    let (lhs, first, _) = terms(&u, &eta, delta);
    lhs / first
}
