//! Boundary bump on the unit disk.
//!
//! The half-plane function is built in scaled coordinates `X`: the log
//! potential of the union of a unit-size disk and its mirror image, shifted
//! by a constant, then matched to a compactly supported quadratic tail with
//! a quintic Hermite blend. It is carried to the disk by a Mobius map that
//! sends the boundary circle to the line `X2 = 0` and `B_rho(x0)` onto the
//! source disk exactly. Harmonicity and the mirror symmetry are conformally
//! invariant, so the source region, the sign of the Laplacian outside it and
//! the Neumann condition all transfer exactly; only the magnitude of the
//! Laplacian picks up the conformal factor, which fixes the admissible rho.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::TestEval;
use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, DomainKind};
use crate::quad;
use crate::vec2::{add, dot, mat_add, mat_scale, norm, norm2, outer, rot90, scale, sub, Mat2};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpParams {
    /// Smallest matching radius of the far-field tail. Raised to
    /// `6.5 |X0|` when the source disk sits deep, since the mismatch the
    /// blend absorbs grows like `|X0|^2 / lambda0^2` and must stay small
    /// against the tail's Laplacian.
    pub lambda0: f64,
    /// Relative tolerance on the Laplacian inside `B_rho(x0)`; sets `rho0`.
    pub laplacian_tol: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        Self { lambda0: 8.0, laplacian_tol: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBump {
    pub center_projection: Point,
    pub x0: Point,
    pub rho: f64,
    pub lambda0: f64,
    /// Reported support multiplier `Lambda = lambda0 + 2`.
    pub lambda_cap: f64,
    /// Largest admissible `rho` for this `x0` and tolerance.
    pub rho0: f64,
    /// Center `X0` of the source disk in scaled coordinates.
    pub x0_scaled: Point,
    /// Radius of the source disk in scaled coordinates.
    pub source_radius: f64,
    /// Area of the union of the source disk and its mirror image.
    pub m: f64,
    pub a_const: f64,
    theta0: f64,
    scale: f64,
}

/// Admissible radius: the conformal factor stays within `1 +- tol` on
/// `B_rho(x0)` when `|1 + z|` varies by at most the returned amount.
fn admissible_rho(d0: f64, tol: f64) -> f64 {
    let base = 2.0 - d0;
    base * (1.0 - (1.0 + tol).powf(-0.25)).min((1.0 - tol).powf(-0.25) - 1.0)
}

pub fn build_boundary_bump(
    domain: &DomainGeometry,
    x0: Point,
    rho: f64,
    params: BumpParams,
) -> Result<BoundaryBump> {
    if domain.kind != DomainKind::UnitDisk {
        return Err(Error::UnsupportedDomain("boundary bumps are built on the unit disk".into()));
    }
    let d0 = domain.distance_to_boundary(x0)?;
    if !(rho > 0.0) {
        return Err(Error::Invalid(format!("rho = {rho}")));
    }
    if d0 > 2.0 * rho {
        return Err(Error::Precondition(format!(
            "x0 at depth {d0:.6} exceeds 2 rho = {:.6}",
            2.0 * rho
        )));
    }
    let rho0 = admissible_rho(d0, params.laplacian_tol).min(domain.sigma0);
    if rho > rho0 {
        return Err(Error::Precondition(format!(
            "rho = {rho} exceeds the admissible rho0 = {rho0:.6}"
        )));
    }
    let c = norm(x0);
    let theta0 = x0[1].atan2(x0[0]);
    // T(z) = i (1 - z)/(1 + z) after rotating P(x0) to 1; |T'(c)| = 2/(1+c)^2
    let s = 2.0 * rho / ((1.0 + c) * (1.0 + c));
    let y1 = (1.0 - c - rho) / (1.0 + c + rho);
    let y2 = (1.0 - c + rho) / (1.0 + c - rho);
    let a = 0.5 * (y1 + y2) / s;
    let r = 0.5 * (y2 - y1) / s;
    let m = union_area(a, r);
    let l0 = params.lambda0.max(6.5 * a);
    let a_const = m / (4.0 * PI * l0) + m / (2.0 * PI) * l0.ln();
    Ok(BoundaryBump {
        center_projection: [theta0.cos(), theta0.sin()],
        x0,
        rho,
        lambda0: l0,
        lambda_cap: l0 + 2.0,
        rho0,
        x0_scaled: [0.0, a],
        source_radius: r,
        m,
        a_const,
        theta0,
        scale: s,
    })
}

fn union_area(a: f64, r: f64) -> f64 {
    2.0 * PI * r * r - lens_area(a, r)
}

/// Area of the intersection of two radius-`r` disks with centers `2a` apart.
fn lens_area(a: f64, r: f64) -> f64 {
    if a >= r {
        0.0
    } else {
        2.0 * r * r * (a / r).acos() - 2.0 * a * (r * r - a * a).sqrt()
    }
}

type Jet = (f64, Point, Mat2);

fn jet_add(a: Jet, b: Jet) -> Jet {
    (a.0 + b.0, add(a.1, b.1), mat_add(&a.2, &b.2))
}

fn jet_scale(k: f64, a: Jet) -> Jet {
    (k * a.0, scale(k, a.1), mat_scale(k, &a.2))
}

/// Log potential `-(1/2pi) int_{B_r(c)} log|X - Y| dY` of a uniform disk.
fn disk_potential(x: Point, c: Point, r: f64) -> Jet {
    let s = sub(x, c);
    let s2 = norm2(s);
    if s2 <= r * r {
        (
            (r * r - s2) / 4.0 - 0.5 * r * r * r.ln(),
            scale(-0.5, s),
            [[-0.5, 0.0], [0.0, -0.5]],
        )
    } else {
        let k = -0.5 * r * r;
        let h = mat_scale(k / (s2 * s2), &[[s2 - 2.0 * s[0] * s[0], -2.0 * s[0] * s[1]], [
            -2.0 * s[0] * s[1],
            s2 - 2.0 * s[1] * s[1],
        ]]);
        (0.5 * k * s2.ln(), scale(k / s2, s), h)
    }
}

/// `int_lens log|X - Y| dY` and its first two derivatives, from boundary
/// integrals over the two arcs bounding the lens.
fn lens_log_integral(x: Point, a: f64, r: f64, hessian: bool) -> Jet {
    let beta = (a / r).asin();
    // (center, arc range); outward normal is radial on both arcs
    let arcs = [([0.0, a], PI + beta, 2.0 * PI - beta), ([0.0, -a], beta, PI - beta)];
    let mut out: Jet = (0.0, [0.0, 0.0], [[0.0; 2]; 2]);
    let tol = 1e-14;
    for (c, t0, t1) in arcs {
        let pt = |t: f64| -> (Point, Point) {
            let n = [t.cos(), t.sin()];
            (add(c, scale(r, n)), n)
        };
        out.0 += quad::integrate(
            |t| {
                let (y, n) = pt(t);
                let d = sub(y, x);
                let q = norm2(d);
                let lg = if q > 0.0 { q.ln() } else { 0.0 };
                dot(d, n) * (lg - 1.0) / 4.0 * r
            },
            t0,
            t1,
            tol,
            0.0,
        );
        for k in 0..2 {
            out.1[k] -= quad::integrate(
                |t| {
                    let (y, n) = pt(t);
                    0.5 * norm2(sub(x, y)).ln() * n[k] * r
                },
                t0,
                t1,
                tol,
                0.0,
            );
        }
        if hessian {
            for j in 0..2 {
                for k in 0..2 {
                    out.2[j][k] -= quad::integrate(
                        |t| {
                            let (y, n) = pt(t);
                            let d = sub(x, y);
                            d[j] * n[k] / norm2(d) * r
                        },
                        t0,
                        t1,
                        1e-11,
                        1e-12,
                    );
                }
            }
        }
    }
    out
}

fn hermite(t: f64) -> [f64; 4] {
    // (H0, H0', H1, H1') with vanishing second derivatives at both ends
    let t2 = t * t;
    let t3 = t2 * t;
    [
        1.0 - 10.0 * t3 + 15.0 * t3 * t - 6.0 * t3 * t2,
        -30.0 * t2 + 60.0 * t3 - 30.0 * t3 * t,
        t - 6.0 * t3 + 8.0 * t3 * t - 3.0 * t3 * t2,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t3 * t,
    ]
}

impl BoundaryBump {
    /// Potential of the union of the source disk and its mirror image.
    fn union_potential(&self, x: Point, hessian: bool) -> Jet {
        let a = self.x0_scaled[1];
        let r = self.source_radius;
        let mut u = jet_add(disk_potential(x, [0.0, a], r), disk_potential(x, [0.0, -a], r));
        if a < r {
            let lens = lens_log_integral(x, a, r, hessian);
            u = jet_add(u, jet_scale(1.0 / (2.0 * PI), lens));
        }
        u
    }

    fn tail(&self, x: Point) -> Jet {
        let k = self.m / (4.0 * PI * self.lambda0);
        let r = norm(x);
        let g = self.lambda0 + 1.0 - r;
        if g <= 0.0 {
            return (0.0, [0.0, 0.0], [[0.0; 2]; 2]);
        }
        let w = scale(1.0 / r, x);
        let ww = outer(w, w);
        let tang = [[1.0 - ww[0][0], -ww[0][1]], [-ww[1][0], 1.0 - ww[1][1]]];
        (
            k * g * g,
            scale(-2.0 * k * g, w),
            mat_add(&mat_scale(2.0 * k, &ww), &mat_scale(-2.0 * k * g / r, &tang)),
        )
    }

    /// `Psi~ - Phi`, the mismatch the blend removes.
    fn mismatch(&self, x: Point, hessian: bool) -> Jet {
        let u = self.union_potential(x, hessian);
        let t = self.tail(x);
        (self.a_const + u.0 - t.0, sub(u.1, t.1), mat_add(&u.2, &mat_scale(-1.0, &t.2)))
    }

    fn blend_value_grad(&self, x: Point) -> (f64, Point) {
        let r = norm(x);
        let w = scale(1.0 / r, x);
        let wp = rot90(w);
        let l0 = self.lambda0;
        let (fv, fg, fh) = self.mismatch(scale(l0, w), true);
        let g = fv;
        let g_r = dot(fg, w);
        let g_p = l0 * dot(fg, wp);
        let hw = [fh[0][0] * w[0] + fh[0][1] * w[1], fh[1][0] * w[0] + fh[1][1] * w[1]];
        let g_rp = l0 * dot(wp, hw) + dot(fg, wp);
        let [h0, dh0, h1, dh1] = hermite(r - l0);
        let val = g * h0 + g_r * h1;
        let d_r = g * dh0 + g_r * dh1;
        let d_p = g_p * h0 + g_rp * h1;
        (val, add(scale(d_r, w), scale(d_p / r, wp)))
    }

    /// Half-plane function `Psi` in scaled coordinates (before the factor 2).
    pub fn psi_scaled(&self, x: Point) -> Jet {
        let r = norm(x);
        let l0 = self.lambda0;
        if r >= l0 + 1.0 {
            (0.0, [0.0, 0.0], [[0.0; 2]; 2])
        } else if r < l0 {
            let u = self.union_potential(x, true);
            (self.a_const + u.0, u.1, u.2)
        } else {
            let t = self.tail(x);
            let (wv, wg) = self.blend_value_grad(x);
            // Hessian of the blend by central differences of its gradient
            let e = 1e-5;
            let mut wh = [[0.0; 2]; 2];
            for j in 0..2 {
                let mut p = x;
                let mut q = x;
                p[j] += e;
                q[j] -= e;
                let gp = self.blend_value_grad(p).1;
                let gq = self.blend_value_grad(q).1;
                for k in 0..2 {
                    wh[k][j] = (gp[k] - gq[k]) / (2.0 * e);
                }
            }
            let sym = 0.5 * (wh[0][1] + wh[1][0]);
            wh[0][1] = sym;
            wh[1][0] = sym;
            (t.0 + wv, add(t.1, wg), mat_add(&t.2, &wh))
        }
    }

    /// Value of `Psi` only.
    fn psi_scaled_value(&self, x: Point) -> f64 {
        let r = norm(x);
        let l0 = self.lambda0;
        if r >= l0 + 1.0 {
            0.0
        } else if r < l0 {
            self.a_const + self.union_potential(x, false).0
        } else {
            self.tail(x).0 + self.blend_value_grad(x).0
        }
    }

    /// Scaled coordinates of a physical point, with `F'` and `F''` of the map.
    fn to_scaled(&self, x: Point) -> Option<(Point, Complex64, Complex64)> {
        let rot = Complex64::from_polar(1.0, -self.theta0);
        let z = rot * Complex64::new(x[0], x[1]);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let den = one + z;
        if den.norm() < 1e-300 {
            return None;
        }
        let w = i * (one - z) / den / self.scale;
        let xs = [w.re, w.im];
        if !(norm(xs) < self.lambda0 + 1.0) {
            return None;
        }
        let d1 = rot * (-2.0 * i) / (den * den) / self.scale;
        let d2 = rot * rot * (4.0 * i) / (den * den * den) / self.scale;
        Some((xs, d1, d2))
    }

    pub fn value(&self, x: Point) -> f64 {
        match self.to_scaled(x) {
            Some((xs, _, _)) => 2.0 * self.psi_scaled_value(xs),
            None => 0.0,
        }
    }

    pub fn eval(&self, x: Point) -> TestEval {
        let Some((xs, d1, d2)) = self.to_scaled(x) else {
            return TestEval::ZERO;
        };
        let (v, g, h) = self.psi_scaled(xs);
        // chain rule for a real function of a holomorphic map, in Wirtinger form
        let gw = Complex64::new(g[0], -g[1]);
        let gx = gw * d1;
        let hw = Complex64::new(h[0][0] - h[1][1], -2.0 * h[0][1]);
        let a4 = hw * d1 * d1 + 2.0 * gw * d2;
        let lap = (h[0][0] + h[1][1]) * d1.norm_sqr();
        let hxx = 0.5 * (lap + a4.re);
        let hyy = 0.5 * (lap - a4.re);
        let hxy = -0.5 * a4.im;
        TestEval {
            value: 2.0 * v,
            grad: [2.0 * gx.re, -2.0 * gx.im],
            hess: [[2.0 * hxx, 2.0 * hxy], [2.0 * hxy, 2.0 * hyy]],
        }
    }

    /// Support radius around `x0` inside the disk, in units of `rho`. The
    /// preimage of `|X| <= lambda0 + 1` is an Apollonius disk around `P(x0)`
    /// whose point farthest from `x0` lies on the inner axis.
    pub fn support_multiplier(&self) -> f64 {
        let s = self.scale * (self.lambda0 + 1.0);
        if s >= 1.0 {
            return f64::INFINITY;
        }
        (norm(self.x0) - (1.0 - s) / (1.0 + s)) / self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpReport {
    /// Largest relative deviation of the difference Laplacian from `-2/rho^2`
    /// inside `B_rho(x0)`.
    pub laplacian_rel_err: f64,
    pub psi_min_in_ball: f64,
    pub psi_max: f64,
    /// Largest `|d psi / d nu|` on the boundary arc inside the support.
    pub neumann: f64,
    /// Smallest `rho^2 Lap psi` outside `B_rho(x0)`.
    pub scaled_laplacian_min_outside: f64,
    /// Largest `|x - x0| / rho` over sampled points with `psi != 0`.
    pub support_extent: f64,
    pub lambda_cap: f64,
    /// `max rho|grad psi| + rho^2|hess psi| + rho^2|nu . grad psi|/d`.
    pub bound_constant: f64,
}

impl BumpReport {
    pub fn passed(&self) -> bool {
        self.laplacian_rel_err <= 0.05
            && self.neumann <= 1e-6
            && self.psi_min_in_ball >= 0.5
            && self.scaled_laplacian_min_outside >= -1e-6
            && self.support_extent <= self.lambda_cap
    }
}

fn frob(h: &Mat2) -> f64 {
    (h[0][0] * h[0][0] + h[0][1] * h[0][1] + h[1][0] * h[1][0] + h[1][1] * h[1][1]).sqrt()
}

/// Checks the defining properties of `bump`; `mesh` is the difference step
/// in units of `rho`.
pub fn verify_bump(bump: &BoundaryBump, mesh: f64) -> BumpReport {
    let rho = bump.rho;
    let x0 = bump.x0;
    let h = mesh * rho;
    let target = -2.0 / (rho * rho);

    // difference Laplacian on a lattice inside B_rho(x0) intersected with the disk
    let n = 48;
    let inner: Vec<Point> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            [
                x0[0] + rho * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0),
                x0[1] + rho * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0),
            ]
        })
        .filter(|&p| norm(sub(p, x0)) <= rho - 2.0 * h && norm(p) <= 1.0)
        .collect();
    let laplacian_rel_err = inner
        .par_iter()
        .map(|&p| {
            let c = bump.value(p);
            let l = (bump.value([p[0] + h, p[1]])
                + bump.value([p[0] - h, p[1]])
                + bump.value([p[0], p[1] + h])
                + bump.value([p[0], p[1] - h])
                - 4.0 * c)
                / (h * h);
            ((l - target) / target).abs()
        })
        .reduce(|| 0.0, f64::max);

    // analytic quantities on a lattice covering the nominal support
    let big = bump.lambda_cap + 1.0;
    let m = 160;
    let pts: Vec<Point> = (0..m * m)
        .map(|k| {
            let (i, j) = (k % m, k / m);
            [
                x0[0] + big * rho * (2.0 * (i as f64 + 0.5) / m as f64 - 1.0),
                x0[1] + big * rho * (2.0 * (j as f64 + 0.5) / m as f64 - 1.0),
            ]
        })
        .filter(|&p| norm(p) <= 1.0)
        .chain(inner.iter().copied())
        .collect();
    let init = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    let (psi_min_in_ball, psi_max, lap_out, extent, bound) = pts
        .par_iter()
        .map(|&p| {
            let e = bump.eval(p);
            let r = norm(sub(p, x0));
            let in_ball = r <= rho;
            let d = 1.0 - norm(p);
            let nu = scale(1.0 / norm(p), p);
            let mut b = rho * norm(e.grad) + rho * rho * frob(&e.hess);
            if d > 1e-9 {
                b += rho * rho * dot(nu, e.grad).abs() / d;
            }
            (
                if in_ball { e.value } else { f64::INFINITY },
                e.value,
                if in_ball || e.value == 0.0 { f64::INFINITY } else { rho * rho * e.laplacian() },
                if e.value != 0.0 { r / rho } else { 0.0 },
                b,
            )
        })
        .reduce(
            || init,
            |a, b| (a.0.min(b.0), a.1.max(b.1), a.2.min(b.2), a.3.max(b.3), a.4.max(b.4)),
        );

    // normal derivative along the boundary arc
    let th0 = bump.center_projection[1].atan2(bump.center_projection[0]);
    let span = big * rho;
    let neumann = (0..512)
        .map(|k| {
            let th = th0 + span * (2.0 * (k as f64 + 0.5) / 512.0 - 1.0);
            let p = [th.cos(), th.sin()];
            dot(p, bump.eval(p).grad).abs()
        })
        .fold(0.0, f64::max);

    BumpReport {
        laplacian_rel_err,
        psi_min_in_ball,
        psi_max,
        neumann,
        scaled_laplacian_min_outside: lap_out,
        support_extent: extent,
        lambda_cap: bump.lambda_cap,
        bound_constant: bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(d_over_rho: f64, rho: f64) -> BoundaryBump {
        let disk = DomainGeometry::unit_disk();
        let th: f64 = 0.7;
        let r = 1.0 - d_over_rho * rho;
        build_boundary_bump(&disk, [r * th.cos(), r * th.sin()], rho, BumpParams::default()).unwrap()
    }

    #[test]
    fn lens_area_limits() {
        assert!((lens_area(0.0, 1.0) - PI).abs() < 1e-14);
        assert_eq!(lens_area(1.0, 1.0), 0.0);
        // half-distance 1/2: 2 acos(1/2) - sqrt(3)/2 = 2pi/3 - sqrt(3)/2
        assert!((lens_area(0.5, 1.0) - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn lens_potential_matches_area_quadrature() {
        // brute-force polar quadrature of the lens at an outside point
        let (a, r) = (0.4, 1.0);
        let x = [2.5, 0.3];
        let lens = lens_log_integral(x, a, r, true);
        let half = (r * r - a * a).sqrt();
        let brute = quad::integrate(
            |y1: f64| {
                let top = (r * r - y1 * y1).sqrt() - a;
                quad::integrate(|y2: f64| 0.5 * norm2(sub(x, [y1, y2])).ln(), -top, top, 1e-13, 0.0)
            },
            -half,
            half,
            1e-12,
            0.0,
        );
        assert!((lens.0 - brute).abs() < 1e-10, "{} vs {brute}", lens.0);
        // inside the lens the potential has Laplacian 2 pi (density one)
        let l = lens_log_integral([0.1, 0.05], a, r, true);
        assert!((l.2[0][0] + l.2[1][1] - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn chain_rule_matches_differences() {
        let b = bump(0.5, 0.01);
        let p = [0.995 * 0.7f64.cos() + 0.003, 0.995 * 0.7f64.sin() - 0.01];
        let e = b.eval(p);
        let k = 1e-6;
        let gx = (b.value([p[0] + k, p[1]]) - b.value([p[0] - k, p[1]])) / (2.0 * k);
        let gy = (b.value([p[0], p[1] + k]) - b.value([p[0], p[1] - k])) / (2.0 * k);
        assert!((gx - e.grad[0]).abs() < 1e-4 * norm(e.grad).max(1.0));
        assert!((gy - e.grad[1]).abs() < 1e-4 * norm(e.grad).max(1.0));
        let hx = (b.eval([p[0] + k, p[1]]).grad[1] - b.eval([p[0] - k, p[1]]).grad[1]) / (2.0 * k);
        assert!((hx - e.hess[0][1]).abs() < 1e-4 * frob(&e.hess));
    }

    #[test]
    fn scaled_source_is_unit_size() {
        let b = bump(0.5, 0.01);
        assert!((b.source_radius - 1.0).abs() < 0.02);
        assert!((b.x0_scaled[1] - 0.5).abs() < 0.02);
        assert_eq!(b.lambda_cap, 10.0);
        assert!(b.support_multiplier() <= b.lambda_cap);
    }

    #[test]
    fn deep_or_wide_requests_fail() {
        let disk = DomainGeometry::unit_disk();
        let e = build_boundary_bump(&disk, [0.9, 0.0], 0.01, BumpParams::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
        let e = build_boundary_bump(&disk, [0.95, 0.0], 0.1, BumpParams::default());
        match e {
            Err(Error::Precondition(msg)) => assert!(msg.contains("rho0")),
            other => panic!("{other:?}"),
        }
    }
}
