//! Double integrals of the quadratic terms.
//!
//! On the radial backend the data and an origin-centered test are rotation
//! invariant, so `x` is pinned to the positive axis and only the relative
//! angle of `y` is integrated. The rectangle has no collar decomposition:
//! `Q1` is a cell-pair sum and `Q5` is the rest of the total, obtained from
//! the discrete potential.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::greens::{smooth_gradient, GreensDecomposition};
use crate::quad;
use crate::solver::{solve_poisson_neumann, Density, Field, RadialField};
use crate::testfn::TestFunction;
use crate::vec2::{add, dot, norm, norm2, scale, sub};
use crate::Point;

use super::{CollarWeight, WeakOptions};

/// Quadratic terms at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairTerms {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q3_1: f64,
    pub q3_2: f64,
    pub q4: f64,
    pub q5: f64,
}

impl PairTerms {
    pub(crate) fn add_scaled(&mut self, o: &PairTerms, w: f64) {
        self.q1 += w * o.q1;
        self.q2 += w * o.q2;
        self.q3 += w * o.q3;
        self.q3_1 += w * o.q3_1;
        self.q3_2 += w * o.q3_2;
        self.q4 += w * o.q4;
        self.q5 += w * o.q5;
    }
}

/// `Q1..Q5` for the flux density `f` (cell values) of a single snapshot.
pub fn pair_terms(u: &Density, f: &[f64], psi: &TestFunction, opts: &WeakOptions) -> Result<PairTerms> {
    match u {
        Density::Radial(r) => radial_pairs(r, f, psi, opts),
        Density::Rect(r) => rect_pairs(r, f, psi),
    }
}

struct Node {
    r: f64,
    w: f64,
    f: f64,
    /// `psi'(r)`
    g: f64,
    lap: f64,
    z: f64,
}

fn radial_nodes(u: &RadialField, f: &[f64], psi: &TestFunction, q: usize, dec: &GreensDecomposition) -> Vec<Node> {
    let (gx, gw) = quad::gauss_legendre(q);
    let grid = &u.grid;
    let mut out = Vec::with_capacity(grid.n * q);
    for c in 0..grid.n {
        let (a, b) = (grid.faces[c], grid.faces[c + 1]);
        for (x, w) in gx.iter().zip(&gw) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let e = psi.eval([r, 0.0]);
            out.push(Node {
                r,
                w: 0.5 * (b - a) * w * r,
                f: f[c],
                g: e.grad[0],
                lap: e.laplacian(),
                z: dec.cutoff_z([r, 0.0]),
            });
        }
    }
    out
}

fn radial_pairs(u: &RadialField, f: &[f64], psi: &TestFunction, opts: &WeakOptions) -> Result<PairTerms> {
    if norm(psi.x0()) != 0.0 {
        return Err(Error::Precondition("radial trajectories need a test centered at the origin".into()));
    }
    let dec = GreensDecomposition::build(DomainGeometry::unit_disk())?;
    let nodes = radial_nodes(u, f, psi, opts.radial_nodes.max(1), &dec);
    let m = opts.angles.unwrap_or((2 * u.grid.n).max(128));
    let rs = psi.support_radius();
    let in_s: Vec<bool> = nodes.iter().map(|n| n.r < rs).collect();
    let trig: Vec<(f64, f64)> = (0..m).map(|k| (2.0 * PI * k as f64 / m as f64).sin_cos()).collect();
    // grad psi on the boundary, radial for an origin-centered test
    let gb = psi.eval([1.0, 0.0]).grad[0];
    let paired = opts.collar == CollarWeight::Paired;
    let mut acc = PairTerms::default();
    let four_pi = 4.0 * PI;
    for (i, x) in nodes.iter().enumerate() {
        let xp: Point = [x.r, 0.0];
        let dx = 1.0 - x.r;
        for (j, y) in nodes.iter().enumerate() {
            if !(in_s[i] || in_s[j]) {
                continue;
            }
            let wij = x.w * y.w * x.f * y.f * 2.0 * PI * (2.0 * PI / m as f64);
            if wij == 0.0 {
                continue;
            }
            let dy = 1.0 - y.r;
            let (zxy, zyx) = if paired { (x.z * y.z, x.z * y.z) } else { (y.z, x.z) };
            let ratio = if paired { x.z } else { 1.0 };
            let mut t = PairTerms::default();
            for (k, &(s, c)) in trig.iter().enumerate() {
                let yv = [y.r * c, y.r * s];
                let nuy = [c, s];
                let gxv = [x.g, 0.0];
                let gyv = scale(y.g, nuy);
                let d = sub(xp, yv);
                let r2 = norm2(d);
                t.q1 += if i == j && k == 0 {
                    x.lap / (8.0 * PI)
                } else {
                    dot(d, sub(gxv, gyv)) / (four_pi * r2)
                };
                if zxy != 0.0 || zyx != 0.0 {
                    let dp = sub([1.0, 0.0], nuy);
                    let big_d = norm2(dp) + (dx + dy) * (dx + dy);
                    let sv = add([dx, 0.0], scale(dy, nuy));
                    let a = scale(zxy, gxv);
                    let b = scale(zyx, gyv);
                    t.q2 += dot(sub(a, b), dp) / (four_pi * big_d);
                    t.q3 -= dot(add(a, b), sv) / (four_pi * big_d);
                    let ax = scale(zxy, sub(gxv, [x.z * gb, 0.0]));
                    let by = scale(zyx, sub(gyv, scale(y.z * gb, nuy)));
                    t.q3_1 -= dot(add(ax, by), sv) / (four_pi * big_d);
                    // grad psi(P x).nu(y) and grad psi(P y).nu(x)
                    let px_ny = gb * c;
                    let py_nx = gb * c;
                    t.q3_2 -= (zxy * x.z * dy * px_ny + zyx * y.z * dx * py_nx) / (four_pi * big_d);
                }
                if in_s[i] && x.g != 0.0 {
                    let ct = dec.collar_terms(xp, yv)?;
                    let collar = scale(ratio, add(ct.image, ct.curvature));
                    t.q4 -= ratio * dot(gxv, ct.curvature);
                    t.q5 -= dot(gxv, sub(smooth_gradient(xp, yv), collar));
                }
            }
            acc.add_scaled(&t, wij);
        }
    }
    Ok(acc)
}

fn rect_pairs(u: &Field, f: &[f64], psi: &TestFunction) -> Result<PairTerms> {
    let a = u.cell_area();
    let x0 = psi.x0();
    let reach = psi.support_radius() + 0.5 * (u.hx * u.hx + u.hy * u.hy).sqrt();
    let n = u.values.len();
    let in_s: Vec<bool> = (0..n).map(|k| norm(sub(u.center(k), x0)) <= reach).collect();
    let evals: Vec<_> = (0..n).map(|k| if in_s[k] { Some(psi.eval(u.center(k))) } else { None }).collect();
    let grad = |k: usize| evals[k].map(|e| e.grad).unwrap_or([0.0, 0.0]);
    let mut q1 = 0.0;
    for i in (0..n).filter(|&i| in_s[i]) {
        let xi = u.center(i);
        let gi = grad(i);
        let mut row = 0.0;
        for j in 0..n {
            let k = if i == j {
                evals[i].map(|e| e.laplacian()).unwrap_or(0.0) / (8.0 * PI)
            } else {
                let d = sub(xi, u.center(j));
                dot(d, sub(gi, grad(j))) / (4.0 * PI * norm2(d))
            };
            // pairs with both points in the support are met twice
            let mult = if in_s[j] { 1.0 } else { 2.0 };
            row += mult * k * f[j];
        }
        q1 += row * f[i];
    }
    q1 *= a * a;
    let total = rect_total_by_potential(u, f, &in_s, grad)?;
    Ok(PairTerms { q1, q5: total - q1, ..PairTerms::default() })
}

fn rect_total_by_potential(u: &Field, f: &[f64], in_s: &[bool], grad: impl Fn(usize) -> Point) -> Result<f64> {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let rhs = Field::new(u.nx, u.ny, u.hx, u.hy, f.iter().map(|x| x - mean).collect())?;
    let v = solve_poisson_neumann(&Density::Rect(rhs), 1e-10)?;
    let v = v.values();
    let mut total = 0.0;
    for k in (0..f.len()).filter(|&k| in_s[k]) {
        let (i, j) = (k % u.nx, k / u.nx);
        let gx = if i > 0 && i + 1 < u.nx { (v[k + 1] - v[k - 1]) / (2.0 * u.hx) } else { 0.0 };
        let gy = if j > 0 && j + 1 < u.ny { (v[k + u.nx] - v[k - u.nx]) / (2.0 * u.hy) } else { 0.0 };
        total -= f[k] * dot(grad(k), [gx, gy]);
    }
    Ok(total * u.cell_area())
}

/// Cumulative `int_0^r (F - shift) s ds` evaluated inside each cell.
fn radial_integral_fn<'a>(u: &'a RadialField, f: &'a [f64], shift: f64) -> impl Fn(usize, f64) -> f64 + 'a {
    let g = &u.grid;
    let mut base = vec![0.0; g.n];
    for c in 1..g.n {
        let (a, b) = (g.faces[c - 1], g.faces[c]);
        base[c] = base[c - 1] + (f[c - 1] - shift) * 0.5 * (b * b - a * a);
    }
    move |c, r| base[c] + (f[c] - shift) * 0.5 * (r * r - g.faces[c] * g.faces[c])
}

fn radial_line_integral(u: &RadialField, f: &[f64], psi: &TestFunction, shift: f64) -> f64 {
    let cum = radial_integral_fn(u, f, shift);
    let (gx, gw) = quad::gauss_legendre(8);
    let g = &u.grid;
    let rs = psi.support_radius();
    let mut s = 0.0;
    for c in 0..g.n {
        let (a, b) = (g.faces[c], g.faces[c + 1]);
        if a >= rs {
            break;
        }
        for (x, w) in gx.iter().zip(&gw) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
            s += 0.5 * (b - a) * w * f[c] * psi.eval([r, 0.0]).grad[0] * cum(c, r);
        }
    }
    2.0 * PI * s
}

/// `Q1` of radial data from Newton's theorem: the Coulomb field of a radial
/// density is `x/|x|^2 int_0^|x| F s ds`.
pub fn newton_q1_radial(u: &RadialField, f: &[f64], psi: &TestFunction) -> f64 {
    radial_line_integral(u, f, psi, 0.0)
}

/// `-int F grad psi . grad v` with the exact potential of the cell-wise
/// constant source `F - mean F`; equals `Q1 + ... + Q5`.
pub fn quadratic_total_by_potential(u: &RadialField, f: &[f64], psi: &TestFunction) -> f64 {
    let mean = f.iter().zip(&u.grid.volumes).map(|(a, b)| a * b).sum::<f64>() / PI;
    radial_line_integral(u, f, psi, mean)
}
