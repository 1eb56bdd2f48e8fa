//! Residual suite for the disk Green's function and its decomposition.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::DomainGeometry;
use crate::greens::{disk_integral_around, greens_disk_exact, GreensDecomposition};
use crate::vec2::{norm, norm2, scale, sub};
use crate::Point;

fn sample_disk(rng: &mut ChaCha8Rng, rmin: f64, rmax: f64) -> Point {
    // area-uniform in the annulus rmin <= r <= rmax
    let u: f64 = rng.gen();
    let r = (rmin * rmin + u * (rmax * rmax - rmin * rmin)).sqrt();
    let th = rng.gen::<f64>() * 2.0 * PI;
    [r * th.cos(), r * th.sin()]
}

/// Largest `|G(x, y) - G(y, x)|` over random pairs.
pub fn symmetry_residual(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = sample_disk(&mut rng, 0.0, 1.0);
            let y = sample_disk(&mut rng, 0.0, 1.0);
            let a = greens_disk_exact(x, y).unwrap();
            let b = greens_disk_exact(y, x).unwrap();
            (a - b).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest `|int G(y, x) dy|` over random sources.
pub fn mean_zero_residual(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Point> = (0..n).map(|_| sample_disk(&mut rng, 0.0, 0.95)).collect();
    xs.par_iter()
        .map(|&x| {
            disk_integral_around(x, |y| if y == x { 0.0 } else { greens_disk_exact(y, x).unwrap() }, 1e-12)
                .abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Third-order one-sided normal difference quotient of `G(., x)` at the
/// boundary point of angle `theta`, with mesh `h`.
pub fn normal_difference(x: Point, theta: f64, h: f64) -> f64 {
    let nu = [theta.cos(), theta.sin()];
    let g = |s: f64| greens_disk_exact(scale(1.0 - s, nu), x).unwrap();
    // backward in the inward direction: f'(0) along +nu
    (11.0 * g(0.0) - 18.0 * g(h) + 9.0 * g(2.0 * h) - 2.0 * g(3.0 * h)) / (6.0 * h)
}

/// Largest normal difference quotient over `n` equally spaced boundary points.
pub fn neumann_residual(x: Point, n: usize, h: f64) -> f64 {
    (0..n)
        .map(|k| normal_difference(x, 2.0 * PI * (k as f64 + 0.5) / n as f64, h).abs())
        .fold(0.0, f64::max)
}

/// Fourth-order central difference gradient of `G(., y)` at `x`.
pub fn fd_gradient(x: Point, y: Point, h: f64) -> Point {
    let g = |p: Point| greens_disk_exact(p, y).unwrap();
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let mut e = [0.0; 2];
        e[k] = h;
        let p1 = [x[0] + e[0], x[1] + e[1]];
        let m1 = [x[0] - e[0], x[1] - e[1]];
        let p2 = [x[0] + 2.0 * e[0], x[1] + 2.0 * e[1]];
        let m2 = [x[0] - 2.0 * e[0], x[1] - 2.0 * e[1]];
        *o = (8.0 * (g(p1) - g(m1)) - (g(p2) - g(m2))) / (12.0 * h);
    }
    out
}

/// Random pairs with both points in the boundary collar, kept away from the
/// diagonal so the difference stencil stays off the singularity.
pub fn collar_pairs(n: usize, seed: u64, sigma0: f64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rmin = 1.0 - 2.0 * sigma0;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = sample_disk(&mut rng, rmin, 0.995);
        let y = sample_disk(&mut rng, rmin, 0.995);
        if norm(sub(x, y)) > 1e-3 {
            out.push((x, y));
        }
    }
    out
}

/// Largest deviation between the four-term decomposition and a finite
/// difference gradient of the exact kernel.
pub fn decomposition_residual(dec: &GreensDecomposition, pairs: &[(Point, Point)]) -> f64 {
    pairs
        .par_iter()
        .map(|&(x, y)| {
            let t = dec.grad_x_g_terms(x, y).unwrap();
            let tau = scale(1.0 / norm2(y), y);
            let dist = norm(sub(x, y)).min(norm(sub(x, tau))).min(1.0 - norm(x) + 1e-3);
            let fd = fd_gradient(x, y, 2e-2 * dist);
            norm(sub(t.total(), fd))
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorms {
    pub k: f64,
    pub grad_k: f64,
    pub w: f64,
}

/// Maxima of `|K|`, `|grad_x K|` and `|W|` over the pairs `(y, x)` with `y` on
/// the nodes `{i/n}` of the positive axis and `x` on the Cartesian mesh of
/// width `1/n` clipped to the closed disk. Rotation invariance makes fixing
/// the direction of `y` lossless.
pub fn sup_norms(dec: &GreensDecomposition, n: usize) -> SupNorms {
    let h = 1.0 / n as f64;
    let mut xs = Vec::new();
    for i in -(n as i64)..=(n as i64) {
        for j in -(n as i64)..=(n as i64) {
            let p = [i as f64 * h, j as f64 * h];
            if norm2(p) <= 1.0 {
                xs.push(p);
            }
        }
    }
    (0..=n)
        .into_par_iter()
        .map(|iy| {
            let y = [iy as f64 * h, 0.0];
            let mut s = SupNorms { k: 0.0, grad_k: 0.0, w: 0.0 };
            for &x in &xs {
                s.k = s.k.max(dec.remainder_k(y, x).abs());
                s.grad_k = s.grad_k.max(norm(dec.grad_x_remainder_k(y, x)));
                if x != y {
                    let t = dec.grad_x_g_terms(x, y).unwrap();
                    s.w = s.w.max(norm(t.w_remainder));
                }
            }
            s
        })
        .reduce(
            || SupNorms { k: 0.0, grad_k: 0.0, w: 0.0 },
            |a, b| SupNorms { k: a.k.max(b.k), grad_k: a.grad_k.max(b.grad_k), w: a.w.max(b.w) },
        )
}

/// Bundle of every gated quantity.
#[derive(Debug, Clone)]
pub struct GreensReport {
    pub symmetry: f64,
    pub mean_zero: f64,
    pub neumann: f64,
    pub decomposition: f64,
    pub coarse: SupNorms,
    pub fine: SupNorms,
}

impl GreensReport {
    pub fn run(mesh: usize, seed: u64) -> Self {
        let dec = GreensDecomposition::build(DomainGeometry::unit_disk()).unwrap();
        let pairs = collar_pairs(1000, seed, dec.domain.sigma0);
        let sup_mesh = (mesh / 8).max(16);
        Self {
            symmetry: symmetry_residual(1000, seed),
            mean_zero: mean_zero_residual(20, seed),
            neumann: neumann_residual([0.2, 0.3], 64, 1.0 / mesh as f64),
            decomposition: decomposition_residual(&dec, &pairs),
            coarse: sup_norms(&dec, sup_mesh),
            fine: sup_norms(&dec, 2 * sup_mesh),
        }
    }

    pub fn rows(&self) -> Vec<(&'static str, f64, f64)> {
        let stab = |a: f64, b: f64| (b / a - 1.0).abs();
        vec![
            ("symmetry", self.symmetry, 1e-12),
            ("mean_zero", self.mean_zero, 1e-8),
            ("neumann", self.neumann, 1e-6),
            ("decomposition", self.decomposition, 1e-4),
            ("sup_k_stability", stab(self.coarse.k, self.fine.k), 0.1),
            ("sup_grad_k_stability", stab(self.coarse.grad_k, self.fine.grad_k), 0.1),
            ("sup_w_stability", stab(self.coarse.w, self.fine.w), 0.1),
        ]
    }

    pub fn passed(&self) -> bool {
        self.rows().iter().all(|(_, v, tol)| v.is_finite() && v <= tol)
    }
}
