//! Decomposed weak formulation evaluated on computed trajectories.
//!
//! For a test `psi` with vanishing normal derivative the regularized problem
//! gives `L1 + Q1 + ... + Q5 = 0`, where `L1` collects the linear terms and
//! `Q1..Q5` split `-int int int grad psi(x) . grad_x G(x, y) dw` along the
//! Coulomb, image, curvature and remainder parts of the Green's function.
//! Here `dw = F(u(x)) F(u(y)) dx dy dt` with `F = f_eps` for the cutoff flux
//! and `F(u) = u` for the nonlinear diffusion.

mod pairs;
#[cfg(test)]
mod tests;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, DomainKind};
use crate::quad;
use crate::solver::{f_eps_unchecked, run, Density, RadialField, RadialGrid, RegKind, SolverConfig, Trajectory};
use crate::testfn::{InteriorBump, TestEval, TestFunction};
use crate::vec2::{dot, norm, quad_form, scale, sub};
use crate::Point;

pub use pairs::{newton_q1_radial, pair_terms, quadratic_total_by_potential, PairTerms};

/// Largest admissible `|d psi / d nu|` on the boundary.
pub const NEUMANN_TOL: f64 = 1e-10;

/// Time-independent test function for the weak form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakTest {
    pub psi: TestFunction,
}

impl WeakTest {
    /// Checks the boundary condition at 512 boundary points (disk) or that
    /// the support stays inside the rectangle.
    pub fn new(domain: &DomainGeometry, psi: TestFunction) -> Result<Self> {
        match domain.kind {
            DomainKind::UnitDisk => {
                let worst = (0..512)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / 512.0;
                        let nu = [th.cos(), th.sin()];
                        dot(psi.eval(nu).grad, nu).abs()
                    })
                    .fold(0.0, f64::max);
                if worst > NEUMANN_TOL {
                    return Err(Error::Precondition(format!("normal derivative {worst:e} on the boundary")));
                }
            }
            DomainKind::Rectangle { .. } => {
                let d = domain.distance_to_boundary(psi.x0())?;
                if !matches!(psi, TestFunction::Interior(_)) || psi.support_radius() > d {
                    return Err(Error::UnsupportedDomain(
                        "the rectangle takes only tests supported away from the boundary".into(),
                    ));
                }
            }
        }
        Ok(Self { psi })
    }

    pub fn interior(domain: &DomainGeometry, x0: Point, rho: f64) -> Result<Self> {
        Self::new(domain, TestFunction::Interior(InteriorBump::new(domain, x0, rho)?))
    }
}

/// `(1/4pi) (x - y).(grad psi(x) - grad psi(y)) / |x - y|^2`, with the
/// angular mean `lap psi / 8pi` for `|x - y| < diag_tol`.
pub fn kernel_h1(x: Point, y: Point, psi: impl Fn(Point) -> TestEval, diag_tol: f64) -> f64 {
    let d = sub(x, y);
    let r2 = dot(d, d);
    if r2.sqrt() < diag_tol {
        return psi(x).laplacian() / (8.0 * PI);
    }
    let gx = psi(x).grad;
    let gy = psi(y).grad;
    dot(d, sub(gx, gy)) / (4.0 * PI * r2)
}

/// How the boundary-collar terms are localized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollarWeight {
    /// `Z(y)` alone, as in the decomposition of `grad_x G(y, x)`.
    Paper,
    /// `Z(x) Z(y)`; the difference is moved into `W`, which stays continuous
    /// because `1 - Z(x)` vanishes near the boundary.
    Paired,
}

#[derive(Debug, Clone, Copy)]
pub struct WeakOptions {
    pub collar: CollarWeight,
    /// Angles of the rotation-reduced quadrature; `None` picks `max(128, 2n)`.
    pub angles: Option<usize>,
    /// Gauss-Legendre nodes per radial cell.
    pub radial_nodes: usize,
}

impl Default for WeakOptions {
    fn default() -> Self {
        Self { collar: CollarWeight::Paired, angles: None, radial_nodes: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QBreakdown {
    pub l1: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q3_1: f64,
    pub q3_2: f64,
    pub q4: f64,
    pub q5: f64,
    pub residual: f64,
}

impl QBreakdown {
    fn assemble(l1: f64, q: PairTerms) -> Self {
        let residual = l1 + q.q1 + q.q2 + q.q3 + q.q4 + q.q5;
        Self { l1, q1: q.q1, q2: q.q2, q3: q.q3, q3_1: q.q3_1, q3_2: q.q3_2, q4: q.q4, q5: q.q5, residual }
    }

    pub fn quadratic_total(&self) -> f64 {
        self.q1 + self.q2 + self.q3 + self.q4 + self.q5
    }
}

/// Simpson weights when the snapshot times are uniform with an even number
/// of intervals, trapezoid weights otherwise.
pub fn time_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
    if uniform && (n - 1) % 2 == 0 {
        (0..n)
            .map(|k| {
                let c = if k == 0 || k == n - 1 {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * dt / 3.0
            })
            .collect()
    } else {
        let mut w = vec![0.0; n];
        for k in 0..n - 1 {
            let h = times[k + 1] - times[k];
            w[k] += 0.5 * h;
            w[k + 1] += 0.5 * h;
        }
        w
    }
}

/// Cell integrals `int_cell psi` and `int_cell lap psi`.
fn cell_integrals(u: &Density, psi: &TestFunction) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = u.values().len();
    let mut val = vec![0.0; n];
    for (k, w) in crate::diagnostics::integrals::test_weights(u, psi) {
        val[k] = w;
    }
    let mut lap = vec![0.0; n];
    match u {
        Density::Radial(f) => {
            if norm(psi.x0()) != 0.0 {
                return Err(Error::Precondition("radial trajectories need a test centered at the origin".into()));
            }
            // divergence theorem on each ring: 2 pi [r psi'(r)]
            let flux = |r: f64| 2.0 * PI * r * psi.eval([r, 0.0]).grad[0];
            let g = &f.grid;
            for (k, l) in lap.iter_mut().enumerate() {
                *l = flux(g.faces[k + 1]) - flux(g.faces[k]);
            }
        }
        Density::Rect(f) => {
            // boundary flux of each cell by 6-point Gauss-Legendre per edge
            let (gx, gw) = quad::gauss_legendre(6);
            let rs = psi.support_radius() + f.hx.max(f.hy);
            let x0 = psi.x0();
            for (k, l) in lap.iter_mut().enumerate() {
                let c = f.center(k);
                if norm(sub(c, x0)) > rs {
                    continue;
                }
                let (a, b) = (0.5 * f.hx, 0.5 * f.hy);
                let mut s = 0.0;
                for (t, w) in gx.iter().zip(&gw) {
                    let gxr = psi.eval([c[0] + a, c[1] + b * t]).grad[0];
                    let gxl = psi.eval([c[0] - a, c[1] + b * t]).grad[0];
                    let gyt = psi.eval([c[0] + a * t, c[1] + b]).grad[1];
                    let gyb = psi.eval([c[0] + a * t, c[1] - b]).grad[1];
                    s += w * ((gxr - gxl) * b + (gyt - gyb) * a);
                }
                *l = s;
            }
        }
    }
    Ok((val, lap))
}

/// Flux density paired with `grad G`.
pub fn pair_density(reg: RegKind, u: &[f64]) -> Vec<f64> {
    match reg {
        RegKind::CutoffFlux { epsilon } => u.iter().map(|&x| f_eps_unchecked(x, epsilon)).collect(),
        RegKind::NonlinearDiffusion { .. } => u.to_vec(),
    }
}

/// Argument of the Laplacian in the diffusion term.
fn diffused(reg: RegKind, u: f64) -> f64 {
    match reg {
        RegKind::CutoffFlux { .. } => u,
        RegKind::NonlinearDiffusion { epsilon } => u + epsilon * u.powf(7.0 / 6.0),
    }
}

/// Evaluates the decomposed weak form over `[0, T]`, `T` the last snapshot.
///
/// The test is constant in time, so the initial-value term of `L1` is joined
/// by its counterpart `int psi u(T)` at the final time.
pub fn weak_residual(traj: &Trajectory, test: &WeakTest, opts: &WeakOptions) -> Result<QBreakdown> {
    let snaps = &traj.snapshots;
    if snaps.len() < 2 || snaps[0].t != 0.0 {
        return Err(Error::Precondition("need the initial snapshot and at least one more".into()));
    }
    let (val, lap) = cell_integrals(&snaps[0].u, &test.psi)?;
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let wt = time_weights(&times);
    let dot_cells = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let u0 = snaps[0].u.values();
    let ut = snaps[snaps.len() - 1].u.values();
    let mut l1 = dot_cells(&val, ut) - dot_cells(&val, u0);
    let mut q = PairTerms::default();
    for (s, w) in snaps.iter().zip(&wt) {
        let d: Vec<f64> = s.u.values().iter().map(|&x| diffused(traj.reg, x)).collect();
        l1 -= w * dot_cells(&d, &lap);
        let f = pair_density(traj.reg, s.u.values());
        q.add_scaled(&pair_terms(&s.u, &f, &test.psi, opts)?, *w);
    }
    Ok(QBreakdown::assemble(l1, q))
}

/// Boundary limit test function
/// `Y.D2psi.Y/4pi + (nu.D2psi.nu/4pi)(l1 + l2)^2 + (h/2pi) grad psi.[G_t + g_n nu]`
/// at `y` on the unit circle.
pub fn limit_test_phi(y: Point, yv: Point, l1: f64, l2: f64, psi: impl Fn(Point) -> TestEval) -> Result<f64> {
    let s = dot(yv, yv) + (l1 + l2) * (l1 + l2);
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("|Y|^2 + (l1 + l2)^2 = {s}, expected 1")));
    }
    if (norm(y) - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("{y:?} is not on the boundary")));
    }
    let e = psi(y);
    let nu = y;
    let h = 1.0;
    let tang = quad_form(yv, &e.hess, yv) / (4.0 * PI);
    let normal = quad_form(nu, &e.hess, nu) / (4.0 * PI) * (l1 + l2) * (l1 + l2);
    let gt = crate::greens::g_t(yv, l1, l2);
    let gn = crate::greens::g_n(yv, l1, l2);
    let curv = h / (2.0 * PI) * dot(e.grad, crate::vec2::add(gt, scale(gn, nu)));
    Ok(tang + normal + curv)
}

/// The same function assembled from its four pieces: the tangential
/// Hessian term, the normal Hessian term, the mixed term and the curvature
/// term. The mixed pieces of the first and third cancel.
pub fn limit_test_phi_pieces(y: Point, yv: Point, l1: f64, l2: f64, psi: impl Fn(Point) -> TestEval) -> [f64; 4] {
    let e = psi(y);
    let nu = y;
    let shifted = crate::vec2::add(yv, scale(l2 - l1, nu));
    let p1 = quad_form(shifted, &e.hess, yv) / (4.0 * PI);
    let p2 = quad_form(nu, &e.hess, nu) / (4.0 * PI) * (l1 + l2) * (l1 + l2);
    let p3 = (l1 - l2) * quad_form(yv, &e.hess, nu) / (4.0 * PI);
    let gt = crate::greens::g_t(yv, l1, l2);
    let gn = crate::greens::g_n(yv, l1, l2);
    let p4 = dot(e.grad, crate::vec2::add(gt, scale(gn, nu))) / (2.0 * PI);
    [p1, p2, p3, p4]
}

#[derive(Debug, Clone)]
pub struct RefinementLevel {
    pub n: usize,
    pub breakdown: QBreakdown,
}

/// Smooth subcritical disk problem: radial Gaussian of mass `2 pi` and
/// variance `0.045`, cutoff flux at `eps = 0.01`, run to `t = 0.01` on a
/// uniform grid of `n` rings with snapshots every `0.0025`.
pub fn subcritical_disk_run(n: usize) -> Result<Trajectory> {
    let grid = std::sync::Arc::new(RadialGrid::uniform(n)?);
    let s2: f64 = 0.09;
    let amp = 2.0 / (s2 * (1.0 - (-1.0 / s2).exp()));
    let u0 = Density::Radial(RadialField::from_fn(grid, |r| amp * (-r * r / s2).exp()));
    let cfg = SolverConfig { t_end: 0.01, snapshot_interval: 0.0025, ..SolverConfig::default() };
    run(&cfg, RegKind::cutoff(0.01)?, u0)
}

/// Weak residual of [`subcritical_disk_run`] at each level for the
/// origin-centered bump of radius `rho`.
pub fn refinement_study(levels: &[usize], rho: f64, opts: &WeakOptions) -> Result<Vec<RefinementLevel>> {
    let test = WeakTest::interior(&DomainGeometry::unit_disk(), [0.0, 0.0], rho)?;
    levels
        .iter()
        .map(|&n| {
            let tr = subcritical_disk_run(n)?;
            Ok(RefinementLevel { n, breakdown: weak_residual(&tr, &test, opts)? })
        })
        .collect()
}

/// Least-squares slope of `log |residual|` against `log h`, `h = 1/n`.
pub fn empirical_order(levels: &[RefinementLevel]) -> f64 {
    let pts: Vec<(f64, f64)> =
        levels.iter().map(|l| ((1.0 / l.n as f64).ln(), l.breakdown.residual.abs().ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
