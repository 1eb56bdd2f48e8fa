//! Integrals of cell-wise constant densities over balls and against test
//! functions.
//!
//! Ball integrals are exact for piecewise-constant data: on the rectangle
//! each cell is weighted by its exact overlap with the disk, on the radial
//! grid each ring by its exact overlap (a difference of two lens areas).

use std::f64::consts::PI;

use crate::quad;
use crate::solver::{Density, Field, RadialField};
use crate::testfn::TestFunction;
use crate::vec2::norm;
use crate::Point;

/// `int_a^b sqrt(r^2 - x^2) dx` for `-r <= a <= b <= r`.
fn int_chord(a: f64, b: f64, r: f64) -> f64 {
    let s = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
    };
    s(b) - s(a)
}

/// Area of `{X <= x, Y <= y}` intersected with the origin-centered disk of
/// radius `r`.
fn quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    let xc = x.clamp(-r, r);
    if xc <= -r || y <= -r {
        return 0.0;
    }
    if y >= r {
        return 2.0 * int_chord(-r, xc, r);
    }
    // chord length below y is y + s on |X| < X*, and 2s (y > 0) or 0 beyond
    let xs = (r * r - y * y).sqrt();
    let mid = |a: f64, b: f64| if b > a { y * (b - a) + int_chord(a, b, r) } else { 0.0 };
    let outer = |a: f64, b: f64| if b > a && y > 0.0 { 2.0 * int_chord(a, b, r) } else { 0.0 };
    outer(-r, xc.min(-xs)) + mid(-xs, xc.min(xs)) + outer(xs, xc)
}

/// Exact area of the rectangle `[x0, x1] x [y0, y1]` inside the disk
/// `B_r(c)`.
pub fn rect_disk_overlap(x0: f64, x1: f64, y0: f64, y1: f64, c: Point, r: f64) -> f64 {
    let (a0, a1, b0, b1) = (x0 - c[0], x1 - c[0], y0 - c[1], y1 - c[1]);
    if a0 >= r || a1 <= -r || b0 >= r || b1 <= -r {
        return 0.0;
    }
    let corner = |x: f64, y: f64| quadrant_area(x, y, r);
    (corner(a1, b1) - corner(a0, b1) - corner(a1, b0) + corner(a0, b0)).max(0.0)
}

/// Area of `B_a(0) cap B_r(c)` with `|c| = d`.
pub fn lens_overlap(a: f64, d: f64, r: f64) -> f64 {
    if a <= 0.0 || r <= 0.0 || d >= a + r {
        return 0.0;
    }
    if d <= (a - r).abs() {
        return PI * a.min(r).powi(2);
    }
    let c1 = ((d * d + a * a - r * r) / (2.0 * d * a)).clamp(-1.0, 1.0);
    let c2 = ((d * d + r * r - a * a) / (2.0 * d * r)).clamp(-1.0, 1.0);
    let k = ((-d + a + r) * (d + a - r) * (d - a + r) * (d + a + r)).max(0.0);
    a * a * c1.acos() + r * r * c2.acos() - 0.5 * k.sqrt()
}

/// Cell weights `|cell cap B_r(c)|` as `(index, weight)` pairs.
pub fn ball_weights(u: &Density, c: Point, r: f64) -> Vec<(usize, f64)> {
    match u {
        Density::Rect(f) => rect_ball_weights(f, c, r),
        Density::Radial(f) => radial_ball_weights(f, c, r),
    }
}

fn rect_ball_weights(f: &Field, c: Point, r: f64) -> Vec<(usize, f64)> {
    let i0 = (((c[0] - r) / f.hx).floor().max(0.0)) as usize;
    let i1 = ((((c[0] + r) / f.hx).ceil()) as usize).min(f.nx);
    let j0 = (((c[1] - r) / f.hy).floor().max(0.0)) as usize;
    let j1 = ((((c[1] + r) / f.hy).ceil()) as usize).min(f.ny);
    let mut out = Vec::new();
    for j in j0..j1 {
        for i in i0..i1 {
            let (x0, y0) = (i as f64 * f.hx, j as f64 * f.hy);
            let w = rect_disk_overlap(x0, x0 + f.hx, y0, y0 + f.hy, c, r);
            if w > 0.0 {
                out.push((j * f.nx + i, w));
            }
        }
    }
    out
}

fn radial_ball_weights(f: &RadialField, c: Point, r: f64) -> Vec<(usize, f64)> {
    let g = &f.grid;
    let d = norm(c);
    let mut out = Vec::new();
    let mut prev = 0.0;
    for i in 0..g.n {
        if g.faces[i] >= d + r {
            break;
        }
        let next = lens_overlap(g.faces[i + 1], d, r);
        if next > prev {
            out.push((i, next - prev));
        }
        prev = next;
    }
    out
}

pub fn apply_weights(values: &[f64], w: &[(usize, f64)], g: impl Fn(f64) -> f64) -> f64 {
    w.iter().map(|&(k, a)| a * g(values[k])).sum()
}

/// `int_{B_r(c)} g(u)`.
pub fn ball_integral(u: &Density, c: Point, r: f64, g: impl Fn(f64) -> f64) -> f64 {
    apply_weights(u.values(), &ball_weights(u, c, r), g)
}

/// Cell weights `int_cell psi` for a probe test function.
pub fn test_weights(u: &Density, psi: &TestFunction) -> Vec<(usize, f64)> {
    let x0 = psi.x0();
    let rs = psi.support_radius();
    match u {
        Density::Rect(f) => {
            // 4x4 Gauss-Legendre per cell over the support's bounding box
            let (gx, gw) = quad::gauss_legendre(4);
            let mut out = Vec::new();
            for (k, _) in rect_ball_weights(f, x0, rs) {
                let (i, j) = (k % f.nx, k / f.nx);
                let (cx, cy) = ((i as f64 + 0.5) * f.hx, (j as f64 + 0.5) * f.hy);
                let mut s = 0.0;
                for (a, wa) in gx.iter().zip(&gw) {
                    for (b, wb) in gx.iter().zip(&gw) {
                        s += wa * wb * psi.value([cx + 0.5 * f.hx * a, cy + 0.5 * f.hy * b]);
                    }
                }
                let w = s * 0.25 * f.hx * f.hy;
                if w != 0.0 {
                    out.push((k, w));
                }
            }
            out
        }
        Density::Radial(f) => radial_test_weights(f, psi, x0, rs),
    }
}

fn radial_test_weights(f: &RadialField, psi: &TestFunction, x0: Point, rs: f64) -> Vec<(usize, f64)> {
    let g = &f.grid;
    let mut acc = vec![0.0; g.n];
    if norm(x0) == 0.0 {
        // radial test function: one-dimensional rule per ring
        let (gx, gw) = quad::gauss_legendre(6);
        for i in 0..g.n {
            let (a, b) = (g.faces[i], g.faces[i + 1].min(rs));
            if b <= a {
                break;
            }
            acc[i] = gx
                .iter()
                .zip(&gw)
                .map(|(t, w)| {
                    let r = 0.5 * (a + b) + 0.5 * (b - a) * t;
                    w * psi.value([r, 0.0]) * 2.0 * PI * r
                })
                .sum::<f64>()
                * 0.5
                * (b - a);
        }
    } else {
        // local polar rule around x0, binned by |x|
        let (rx, rw) = quad::composite_gl(0.0, rs, 256, 4);
        let nt = 512;
        for (s, ws) in rx.iter().zip(&rw) {
            for k in 0..nt {
                let th = 2.0 * PI * (k as f64 + 0.5) / nt as f64;
                let x = [x0[0] + s * th.cos(), x0[1] + s * th.sin()];
                let r = norm(x);
                if r > 1.0 {
                    continue;
                }
                let v = psi.value(x);
                if v != 0.0 {
                    acc[g.cell_of(r)] += v * s * ws * 2.0 * PI / nt as f64;
                }
            }
        }
    }
    acc.into_iter().enumerate().filter(|(_, w)| *w != 0.0).collect()
}
