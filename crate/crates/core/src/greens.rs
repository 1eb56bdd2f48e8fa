//! Neumann Green's function of the unit disk and its boundary decomposition.
//!
//! With `Q(x, y) = 1 - 2 x.y + |x|^2 |y|^2 = | |y| x - y/|y| |^2` the disk
//! kernel reads
//!
//! `G(x, y) = -(1/2pi) log|x - y| - (1/4pi) log Q + (|x|^2 + |y|^2)/(4pi) + c0`.
//!
//! Writing `Q` as a polynomial keeps the formula valid at `y = 0`, and
//! `Q = |y|^2 |x - tau(y)|^2` lets the remainder `K` cancel the image
//! logarithm exactly instead of by floating-point subtraction.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, DomainKind};
use crate::quad;
use crate::vec2::{add, dot, norm, norm2, scale, sub};
use crate::Point;

/// Quintic smoothstep cutoff in the distance to the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZProfile {
    pub sigma0: f64,
}

impl ZProfile {
    pub fn of_distance(&self, d: f64) -> f64 {
        let s = ((d - self.sigma0) / self.sigma0).clamp(0.0, 1.0);
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }

    /// dZ/dd
    pub fn derivative(&self, d: f64) -> f64 {
        let s = (d - self.sigma0) / self.sigma0;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        -30.0 * s * s * (1.0 - s) * (1.0 - s) / self.sigma0
    }
}

fn q_poly(x: Point, y: Point) -> f64 {
    1.0 - 2.0 * dot(x, y) + norm2(x) * norm2(y)
}

/// `G` without the normalizing constant.
fn g_unnormalized(x: Point, y: Point) -> f64 {
    -(norm(sub(x, y)).ln()) / (2.0 * PI) - q_poly(x, y).ln() / (4.0 * PI)
        + (norm2(x) + norm2(y)) / (4.0 * PI)
}

/// Integral over the unit disk of `f(y)` by polar coordinates centered at `x`,
/// which puts any point singularity at `x` on the integration origin.
pub fn disk_integral_around<F: Fn(Point) -> f64>(x: Point, f: F, tol: f64) -> f64 {
    let rx2 = norm2(x);
    quad::integrate(
        |th: f64| {
            let e = [th.cos(), th.sin()];
            let b = dot(x, e);
            let reach = -b + (b * b + 1.0 - rx2).max(0.0).sqrt();
            quad::integrate(|s: f64| s * f(add(x, scale(s, e))), 0.0, reach, tol * 0.1, 0.0)
        },
        0.0,
        2.0 * PI,
        tol,
        0.0,
    )
}

static DISK_C0: OnceLock<f64> = OnceLock::new();

/// Normalizing constant making the disk kernel mean-zero, obtained once by
/// adaptive quadrature of the unnormalized kernel against a fixed source.
pub fn disk_c0() -> f64 {
    *DISK_C0.get_or_init(|| {
        let x = [0.3, 0.2];
        let integral = disk_integral_around(x, |y| g_unnormalized(x, y), 1e-13);
        -integral / PI
    })
}

fn check_pair(x: Point, y: Point) -> Result<()> {
    if norm(x) > 1.0 + 1e-12 {
        return Err(Error::OutsideDomain(x));
    }
    if norm(y) > 1.0 + 1e-12 {
        return Err(Error::OutsideDomain(y));
    }
    if x == y {
        return Err(Error::Singular(format!("G evaluated on the diagonal at {x:?}")));
    }
    Ok(())
}

/// Exact Neumann Green's function of the unit disk.
pub fn greens_disk_exact(x: Point, y: Point) -> Result<f64> {
    check_pair(x, y)?;
    Ok(g_unnormalized(x, y) + disk_c0())
}

/// Exact `grad_x G(x, y)`.
pub fn grad_x_greens_exact(x: Point, y: Point) -> Result<Point> {
    check_pair(x, y)?;
    Ok(grad_x_g_unchecked(x, y))
}

fn grad_x_g_unchecked(x: Point, y: Point) -> Point {
    let dxy = sub(x, y);
    let coul = scale(-1.0 / (2.0 * PI * norm2(dxy)), dxy);
    add(coul, smooth_gradient(x, y))
}

/// Tangential similarity term of the curvature correction.
pub fn g_t(yv: Point, l1: f64, l2: f64) -> Point {
    let c = -2.0 * (l1 + l2) * l2 * l2 + (l1 - l2) * norm2(yv);
    scale(c, yv)
}

/// Normal similarity term of the curvature correction.
pub fn g_n(yv: Point, l1: f64, l2: f64) -> f64 {
    -l2 * l2 + 2.0 * l2 * l2 * (l1 + l2) * (l1 + l2) + (l2 * l2 - l1 * l1) * norm2(yv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradGTerms {
    pub coulomb: Point,
    pub image: Point,
    pub curvature: Point,
    pub w_remainder: Point,
    pub d_denominator: f64,
    pub y_sim: Point,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `|x - tau(y)|` when the image term is active, `+inf` otherwise.
    pub image_distance: f64,
}

impl GradGTerms {
    pub fn total(&self) -> Point {
        add(add(self.coulomb, self.image), add(self.curvature, self.w_remainder))
    }
}

/// Boundary data of a point of the disk: distance, normal, projection.
/// The center has no normal; it gets the fixed direction (1, 0), which only
/// matters on a null set where every term involved is bounded.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DiskPoint {
    pub d: f64,
    pub nu: Point,
    pub p: Point,
}

pub(crate) fn disk_point(x: Point) -> DiskPoint {
    let r = norm(x);
    let nu = if r > 0.0 { scale(1.0 / r, x) } else { [1.0, 0.0] };
    DiskPoint { d: (1.0 - r).max(0.0), nu, p: nu }
}

#[derive(Debug, Clone)]
pub struct GreensDecomposition {
    pub domain: DomainGeometry,
    pub z_profile: ZProfile,
    pub normalization_c0: f64,
}

impl GreensDecomposition {
    pub fn build(domain: DomainGeometry) -> Result<Self> {
        if domain.kind != DomainKind::UnitDisk {
            return Err(Error::UnsupportedDomain("Green's decomposition is disk-only".into()));
        }
        Ok(Self {
            domain,
            z_profile: ZProfile { sigma0: domain.sigma0 },
            normalization_c0: disk_c0(),
        })
    }

    pub fn cutoff_z(&self, y: Point) -> f64 {
        self.z_profile.of_distance((1.0 - norm(y)).max(0.0))
    }

    pub fn greens(&self, x: Point, y: Point) -> Result<f64> {
        check_pair(x, y)?;
        Ok(g_unnormalized(x, y) + self.normalization_c0)
    }

    /// `K(y, x) = G(y, x) + (1/2pi)[log|y - x| + Z(y) log|tau(y) - x|]`,
    /// continuous on the closed disk squared, diagonal included.
    pub fn remainder_k(&self, y: Point, x: Point) -> f64 {
        let z = self.cutoff_z(y);
        let base = (norm2(x) + norm2(y)) / (4.0 * PI) + self.normalization_c0;
        if z > 0.0 {
            // -(1/4pi) log Q = -(1/2pi)[log|y| + log|x - tau(y)|]
            let ry = norm(y);
            let tau = scale(1.0 / (ry * ry), y);
            let lt = if z < 1.0 { norm(sub(x, tau)).ln() } else { 0.0 };
            base - ry.ln() / (2.0 * PI) - (1.0 - z) * lt / (2.0 * PI)
        } else {
            base - q_poly(x, y).ln() / (4.0 * PI)
        }
    }

    /// `grad_x K(y, x)`.
    pub fn grad_x_remainder_k(&self, y: Point, x: Point) -> Point {
        let z = self.cutoff_z(y);
        let lin = scale(1.0 / (2.0 * PI), x);
        if z > 0.0 {
            if z >= 1.0 {
                return lin;
            }
            let tau = scale(1.0 / norm2(y), y);
            let dt = sub(x, tau);
            add(lin, scale(-(1.0 - z) / (2.0 * PI * norm2(dt)), dt))
        } else {
            let q = q_poly(x, y);
            add(lin, scale(-1.0 / (4.0 * PI * q), sub(scale(2.0 * norm2(y), x), scale(2.0, y))))
        }
    }

    /// Image and curvature terms of `grad_x G(y, x)`, both carrying `Z(y)`.
    /// Defined on the diagonal as long as the point is not on the boundary.
    pub fn collar_terms(&self, x: Point, y: Point) -> Result<CollarTerms> {
        let px = disk_point(x);
        let py = disk_point(y);
        let dp = sub(px.p, py.p);
        let dd = px.d + py.d;
        let dden = norm2(dp) + dd * dd;
        let sq = dden.sqrt();
        let (y_sim, lambda1, lambda2) = if sq > 0.0 {
            (scale(1.0 / sq, dp), px.d / sq, py.d / sq)
        } else {
            ([0.0, 0.0], 0.0, 0.0)
        };
        let z = self.cutoff_z(y);
        let (image, curvature, image_distance) = if z > 0.0 {
            if dden == 0.0 {
                return Err(Error::Singular(format!("image singularity at x = tau(y) = {x:?}")));
            }
            let num = sub(dp, add(scale(px.d, px.nu), scale(py.d, py.nu)));
            let image = scale(-z / (2.0 * PI * dden), num);
            let hy = 1.0 / norm(y);
            let gt = g_t(y_sim, lambda1, lambda2);
            let gn = g_n(y_sim, lambda1, lambda2);
            let curvature = scale(-z * hy / (2.0 * PI), add(gt, scale(gn, py.nu)));
            let tau = scale(1.0 / norm2(y), y);
            (image, curvature, norm(sub(x, tau)))
        } else {
            ([0.0, 0.0], [0.0, 0.0], f64::INFINITY)
        };
        Ok(CollarTerms { image, curvature, z, d_denominator: dden, y_sim, lambda1, lambda2, image_distance })
    }

    /// Splits `grad_x G(y, x)` into Coulomb, image, curvature and remainder.
    pub fn grad_x_g_terms(&self, x: Point, y: Point) -> Result<GradGTerms> {
        check_pair(x, y)?;
        let dxy = sub(x, y);
        let coulomb = scale(-1.0 / (2.0 * PI * norm2(dxy)), dxy);
        let c = self.collar_terms(x, y)?;
        let w_remainder = sub(sub(smooth_gradient(x, y), c.image), c.curvature);
        Ok(GradGTerms {
            coulomb,
            image: c.image,
            curvature: c.curvature,
            w_remainder,
            d_denominator: c.d_denominator,
            y_sim: c.y_sim,
            lambda1: c.lambda1,
            lambda2: c.lambda2,
            image_distance: c.image_distance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarTerms {
    pub image: Point,
    pub curvature: Point,
    /// `Z(y)`.
    pub z: f64,
    pub d_denominator: f64,
    pub y_sim: Point,
    pub lambda1: f64,
    pub lambda2: f64,
    pub image_distance: f64,
}

/// `grad_x G(x, y)` minus the Coulomb term, in closed form so that it is
/// finite on the diagonal away from the boundary.
pub fn smooth_gradient(x: Point, y: Point) -> Point {
    let q = q_poly(x, y);
    let img = scale(-1.0 / (4.0 * PI * q), sub(scale(2.0 * norm2(y), x), scale(2.0, y)));
    add(img, scale(1.0 / (2.0 * PI), x))
}

/// Sampled `K(y, x)` on the disk.
///
/// Rotation invariance reduces `K` to a function of `(|y|, |x|, angle)`; the
/// table stores a product grid in those variables and interpolates
/// trilinearly.
#[derive(Debug, Clone)]
pub struct KTable {
    pub n_r: usize,
    pub n_theta: usize,
    values: Vec<f64>,
}

impl KTable {
    pub fn build(decomp: &GreensDecomposition, n_r: usize, n_theta: usize) -> Self {
        assert!(n_r >= 2 && n_theta >= 2);
        let mut values = vec![0.0; n_r * n_r * n_theta];
        for iy in 0..n_r {
            let ry = iy as f64 / (n_r - 1) as f64;
            for ix in 0..n_r {
                let rx = ix as f64 / (n_r - 1) as f64;
                for it in 0..n_theta {
                    let th = PI * it as f64 / (n_theta - 1) as f64;
                    let y = [ry, 0.0];
                    let x = [rx * th.cos(), rx * th.sin()];
                    values[(iy * n_r + ix) * n_theta + it] = decomp.remainder_k(y, x);
                }
            }
        }
        Self { n_r, n_theta, values }
    }

    pub fn lookup(&self, y: Point, x: Point) -> f64 {
        let ry = norm(y).min(1.0);
        let rx = norm(x).min(1.0);
        let th = if ry == 0.0 || rx == 0.0 {
            0.0
        } else {
            (dot(x, y) / (rx * ry)).clamp(-1.0, 1.0).acos()
        };
        let fr = (self.n_r - 1) as f64;
        let ft = (self.n_theta - 1) as f64;
        let (iy, ty) = split(ry * fr, self.n_r);
        let (ix, tx) = split(rx * fr, self.n_r);
        let (it, tt) = split(th / PI * ft, self.n_theta);
        let mut acc = 0.0;
        for (a, wa) in [(iy, 1.0 - ty), (iy + 1, ty)] {
            for (b, wb) in [(ix, 1.0 - tx), (ix + 1, tx)] {
                for (c, wc) in [(it, 1.0 - tt), (it + 1, tt)] {
                    let w = wa * wb * wc;
                    if w != 0.0 {
                        acc += w * self.values[(a * self.n_r + b) * self.n_theta + c];
                    }
                }
            }
        }
        acc
    }
}

fn split(s: f64, n: usize) -> (usize, f64) {
    let i = (s.floor() as usize).min(n - 2);
    (i, s - i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_matches_hand_value() {
        // mean of the log terms is pi(|x|^2 - 1)/2 and of the quadratic
        // term |x|^2/4 + 1/8, which leaves c0 = -3/(8 pi)
        assert!((disk_c0() + 3.0 / (8.0 * PI)).abs() < 1e-12, "{}", disk_c0());
    }

    #[test]
    fn cutoff_profile() {
        let z = ZProfile { sigma0: 0.25 };
        assert_eq!(z.of_distance(0.1), 1.0);
        assert_eq!(z.of_distance(0.6), 0.0);
        assert!((z.of_distance(0.375) - 0.5).abs() < 1e-15);
        let e = 1e-6;
        for &d in &[0.3, 0.375, 0.45] {
            let fd = (z.of_distance(d + e) - z.of_distance(d - e)) / (2.0 * e);
            assert!((fd - z.derivative(d)).abs() < 1e-6);
        }
    }

    #[test]
    fn similarity_terms() {
        assert!((g_n([0.0, 0.0], 0.5, 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(g_t([0.0, 0.0], 0.5, 0.5), [0.0, 0.0]);
        // tangential limit: lambda1 = lambda2 = 0 removes every lambda weight
        assert_eq!(g_n([1.0, 0.0], 0.0, 0.0), 0.0);
    }

    #[test]
    fn free_space_shape_far_from_boundary() {
        let dec = GreensDecomposition::build(DomainGeometry::unit_disk()).unwrap();
        let y = [0.1, -0.2];
        let x = [-0.2, 0.15];
        let expect = (norm2(x) + norm2(y)) / (4.0 * PI) + dec.normalization_c0
            - q_poly(x, y).ln() / (4.0 * PI);
        assert!((dec.remainder_k(y, x) - expect).abs() < 1e-15);
        let t = dec.grad_x_g_terms(x, y).unwrap();
        assert_eq!(t.image, [0.0, 0.0]);
        assert_eq!(t.curvature, [0.0, 0.0]);
        let gk = dec.grad_x_remainder_k(y, x);
        assert!(norm(sub(gk, t.w_remainder)) < 1e-13);
    }

    #[test]
    fn remainder_matches_subtraction_off_diagonal() {
        let dec = GreensDecomposition::build(DomainGeometry::unit_disk()).unwrap();
        for &(y, x) in &[
            ([0.9, 0.1], [0.3, -0.4]),
            ([0.6, 0.0], [0.62, 0.05]),
            ([0.0, -0.95], [0.2, -0.9]),
            ([0.2, 0.1], [0.7, 0.7]),
        ] {
            let g = dec.greens(y, x).unwrap();
            let z = dec.cutoff_z(y);
            let tau = scale(1.0 / norm2(y), y);
            let k = g + (norm(sub(y, x)).ln() + z * norm(sub(tau, x)).ln()) / (2.0 * PI);
            assert!((k - dec.remainder_k(y, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_tracks_exact_remainder() {
        let dec = GreensDecomposition::build(DomainGeometry::unit_disk()).unwrap();
        let tab = KTable::build(&dec, 64, 32);
        for &(y, x) in &[([0.8, 0.1], [0.3, -0.4]), ([0.5, 0.5], [0.5, 0.5]), ([0.0, 0.0], [0.4, 0.1])] {
            assert!((tab.lookup(y, x) - dec.remainder_k(y, x)).abs() < 5e-3);
        }
    }
}
