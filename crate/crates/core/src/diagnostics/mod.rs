//! Monitored quantities: mass, entropy, local masses and their rates,
//! local `L^p` norms, concentration points, atom masses and the Sobolev
//! inequality check.

mod atoms;
pub mod integrals;
mod sobolev;

pub use atoms::{atom_estimate, default_ladder, detect_concentrations, AtomEstimate, M0_INTERIOR, M0_QUADRATIC};
pub use integrals::{ball_integral, lens_overlap, rect_disk_overlap};
pub use sobolev::{
    band_limited_family, cutoff_eta, search_c_star, sobolev_check, sobolev_ratio_probe, SobolevResult,
    FROZEN_C_STAR,
};

use crate::error::{Error, Result};
use crate::solver::{entropy_epsilon, Density, EntropyValue, RegKind, Solver, SolverConfig, Trajectory};
use crate::testfn::TestFunction;
use crate::Point;

pub fn mass(u: &Density) -> f64 {
    crate::solver::weighted_sum(u.values(), &u.volumes())
}

pub fn min_max(u: &Density) -> (f64, f64) {
    u.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Entropy `E` and dissipation `D` of `u`, with `v` solved from `u` under
/// `reg` and `eps` weighting the `u^{7/6}` terms.
pub fn entropy(u: &Density, reg: RegKind, eps: f64) -> Result<EntropyValue> {
    let mut s = Solver::new(u, reg, SolverConfig::default())?;
    s.update_potential(u.values());
    Ok(s.entropy(u.values(), eps))
}

/// Entropy with the weight belonging to the regularization.
pub fn entropy_for(u: &Density, reg: RegKind) -> Result<EntropyValue> {
    entropy(u, reg, entropy_epsilon(reg))
}

/// `max_t eps^{1+alpha} int u^{7/6}` over the stored snapshots.
pub fn entropy_epsilon_bound(traj: &Trajectory, alpha_exp: f64) -> Result<f64> {
    let RegKind::NonlinearDiffusion { epsilon } = traj.reg else {
        return Err(Error::Invalid("the u^{7/6} bound concerns nonlinear diffusion runs".into()));
    };
    let k = epsilon.powf(1.0 + alpha_exp);
    Ok(traj
        .snapshots
        .iter()
        .map(|s| {
            let vols = s.u.volumes();
            k * s.u.values().iter().zip(&vols).map(|(x, v)| v * x.max(0.0).powf(7.0 / 6.0)).sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// Local probe `(x0, rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub x0: Point,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    /// Midpoint of the snapshot interval.
    pub t: f64,
    pub rate: f64,
    /// `rho^2 |rate|`.
    pub scaled: f64,
    /// `rho^2 (rate + (2 eps / rho^2) int_{B_rho} u^{7/6})_-`, nonlinear
    /// diffusion only.
    pub one_sided: Option<f64>,
}

/// Time differences of `int psi_rho u` between consecutive snapshots.
pub fn local_mass_rate(traj: &Trajectory, probe: Probe) -> Result<Vec<RateRow>> {
    let first = &traj.snapshots[0].u;
    let psi = TestFunction::for_probe(&first.domain(), probe.x0, probe.rho)?;
    let w = integrals::test_weights(first, &psi);
    let ball = integrals::ball_weights(first, probe.x0, probe.rho);
    let rho2 = probe.rho * probe.rho;
    let masses: Vec<f64> = traj.snapshots.iter().map(|s| integrals::apply_weights(s.u.values(), &w, |u| u)).collect();
    let p76: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| integrals::apply_weights(s.u.values(), &ball, |u| u.max(0.0).powf(7.0 / 6.0)))
        .collect();
    Ok(traj
        .snapshots
        .windows(2)
        .enumerate()
        .filter(|(_, p)| p[1].t > p[0].t)
        .map(|(k, p)| {
            let dt = p[1].t - p[0].t;
            let rate = (masses[k + 1] - masses[k]) / dt;
            let one_sided = match traj.reg {
                RegKind::NonlinearDiffusion { epsilon } => {
                    let extra = 2.0 * epsilon / rho2 * 0.5 * (p76[k] + p76[k + 1]);
                    Some(rho2 * (-(rate + extra)).max(0.0))
                }
                RegKind::CutoffFlux { .. } => None,
            };
            RateRow { t: 0.5 * (p[0].t + p[1].t), rate, scaled: rho2 * rate.abs(), one_sided }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpRow {
    pub t: f64,
    /// `int_{B_rho} u^p`.
    pub lp: f64,
    /// `int_{B_{4 rho}} u`, for the small-mass hypothesis.
    pub mass_4rho: f64,
}

pub fn local_lp(traj: &Trajectory, probe: Probe, p: f64) -> Vec<LpRow> {
    let first = &traj.snapshots[0].u;
    let ball = integrals::ball_weights(first, probe.x0, probe.rho);
    let big = integrals::ball_weights(first, probe.x0, 4.0 * probe.rho);
    traj.snapshots
        .iter()
        .map(|s| LpRow {
            t: s.t,
            lp: integrals::apply_weights(s.u.values(), &ball, |u| u.max(0.0).powf(p)),
            mass_4rho: integrals::apply_weights(s.u.values(), &big, |u| u),
        })
        .collect()
}

/// Test kernel on `Omega x Omega` for the quadratic limit probe.
pub enum PairKernel<'a> {
    /// `sum_k g_k(x) h_k(y)`.
    Separable(Vec<(Box<dyn Fn(Point) -> f64 + 'a>, Box<dyn Fn(Point) -> f64 + 'a>)>),
    General(Box<dyn Fn(Point, Point) -> f64 + 'a>),
}

/// `int int int u(x,t) u(y,t) phi(x,y) dx dy dt` by trapezoidal time rule.
pub fn quadratic_weak_limit_probe(traj: &Trajectory, phi: &PairKernel) -> Result<f64> {
    let PairKernel::Separable(terms) = phi else {
        return Err(Error::Invalid("only finite sums of products are supported".into()));
    };
    let at = |s: &Density| -> f64 {
        let vols = s.volumes();
        let centers = cell_points(s);
        terms
            .iter()
            .map(|(g, h)| {
                let a: f64 = s.values().iter().zip(&vols).zip(&centers).map(|((u, v), c)| u * v * g(*c)).sum();
                let b: f64 = s.values().iter().zip(&vols).zip(&centers).map(|((u, v), c)| u * v * h(*c)).sum();
                a * b
            })
            .sum()
    };
    let vals: Vec<f64> = traj.snapshots.iter().map(|s| at(&s.u)).collect();
    Ok(traj
        .snapshots
        .windows(2)
        .zip(vals.windows(2))
        .map(|(s, v)| 0.5 * (v[0] + v[1]) * (s[1].t - s[0].t))
        .sum())
}

/// Representative point per cell: the center on the rectangle, the point
/// `(r_center, 0)` on the radial grid (only radial test functions are
/// meaningful there).
fn cell_points(u: &Density) -> Vec<Point> {
    match u {
        Density::Rect(f) => (0..f.values.len()).map(|k| f.center(k)).collect(),
        Density::Radial(f) => f.grid.centers.iter().map(|&r| [r, 0.0]).collect(),
    }
}

#[cfg(test)]
mod tests;
