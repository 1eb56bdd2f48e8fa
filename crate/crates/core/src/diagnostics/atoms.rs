//! Concentration points and atom-mass estimates from ball masses.

use std::f64::consts::PI;

use super::integrals::{apply_weights, ball_weights, rect_disk_overlap};
use crate::solver::{weighted_sum, Density, Field, RegKind};
use crate::vec2::{norm, sub};
use crate::Point;

/// Small-mass threshold of the `L^2` estimate.
pub const M0_INTERIOR: f64 = 8.0 * PI / 27.0;
/// Small-mass threshold of the quadratic estimate.
pub const M0_QUADRATIC: f64 = 4.0 * PI / 27.0;

/// Ball masses around every cell center of a uniform grid. The overlap
/// pattern of a cell-centered ball is the same for every cell, so it is
/// computed once and clipped at the walls.
fn rect_ball_mass_map(f: &Field, rho: f64) -> Vec<f64> {
    let ri = (rho / f.hx).ceil() as i64 + 1;
    let rj = (rho / f.hy).ceil() as i64 + 1;
    let mut stencil = Vec::new();
    for dj in -rj..=rj {
        for di in -ri..=ri {
            let x0 = (di as f64 - 0.5) * f.hx;
            let y0 = (dj as f64 - 0.5) * f.hy;
            let w = rect_disk_overlap(x0, x0 + f.hx, y0, y0 + f.hy, [0.0, 0.0], rho);
            if w > 0.0 {
                stencil.push((di, dj, w));
            }
        }
    }
    let (nx, ny) = (f.nx as i64, f.ny as i64);
    (0..f.values.len())
        .map(|k| {
            let (i, j) = ((k % f.nx) as i64, (k / f.nx) as i64);
            stencil
                .iter()
                .filter_map(|&(di, dj, w)| {
                    let (a, b) = (i + di, j + dj);
                    (a >= 0 && b >= 0 && a < nx && b < ny).then(|| w * f.values[(b * nx + a) as usize])
                })
                .sum()
        })
        .collect()
}

/// Local maxima of `x -> int_{B_rho(x)} u` above `m0 / 2`, strongest first,
/// merged within `2 rho`, at most `floor(4 M / m0)` of them.
pub fn detect_concentrations(u: &Density, m0: f64, rho: f64) -> Vec<Point> {
    let total = weighted_sum(u.values(), &u.volumes());
    let cap = (4.0 * total / m0).floor().max(0.0) as usize;
    let mut cand: Vec<(f64, Point)> = match u {
        Density::Rect(f) => {
            let map = rect_ball_mass_map(f, rho);
            let (nx, ny) = (f.nx, f.ny);
            (0..map.len())
                .filter(|&k| {
                    let (i, j) = (k % nx, k / nx);
                    let m = map[k];
                    m > 0.5 * m0
                        && (-1i64..=1).all(|dj| {
                            (-1i64..=1).all(|di| {
                                let (a, b) = (i as i64 + di, j as i64 + dj);
                                a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 || map[(b as usize) * nx + a as usize] <= m
                            })
                        })
                })
                .map(|k| (map[k], f.center(k)))
                .collect()
        }
        Density::Radial(f) => {
            let pts: Vec<f64> = std::iter::once(0.0).chain(f.grid.centers.iter().copied()).collect();
            let masses: Vec<f64> = pts
                .iter()
                .map(|&r| apply_weights(&f.values, &ball_weights(u, [r, 0.0], rho), |x| x))
                .collect();
            (0..pts.len())
                .filter(|&k| {
                    let m = masses[k];
                    m > 0.5 * m0 && (k == 0 || masses[k - 1] <= m) && (k + 1 == pts.len() || masses[k + 1] <= m)
                })
                .map(|k| (masses[k], [pts[k], 0.0]))
                .collect()
        }
    };
    cand.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut out: Vec<Point> = Vec::new();
    for (_, p) in cand {
        if out.len() >= cap {
            break;
        }
        if out.iter().all(|q| norm(sub(*q, p)) > 2.0 * rho) {
            out.push(p);
        }
    }
    out
}

pub fn default_ladder() -> Vec<f64> {
    vec![0.0125, 0.025, 0.05, 0.1, 0.2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomEstimate {
    pub center: Point,
    pub rho_ladder: Vec<f64>,
    /// `int_{B_rho} u`.
    pub alpha: Vec<f64>,
    /// `int_{B_rho} f_eps(u)` (cutoff) or `int_{B_rho} (u + eps u^{7/6})`.
    pub beta: Vec<f64>,
    /// `beta^2`.
    pub gamma: Vec<f64>,
    /// Start of the flattest three-radius window.
    pub plateau_index: Option<usize>,
    pub plateau_alpha: Option<f64>,
    pub plateau_beta: Option<f64>,
    pub no_atom: bool,
    /// Radii were dropped because the ball left the domain.
    pub truncated: bool,
    /// `plateau_alpha^2 / (8 pi plateau_beta)`, nonlinear diffusion only.
    pub ratio: Option<f64>,
    /// `beta <= alpha` at every radius (cutoff only).
    pub beta_below_alpha: Option<bool>,
    /// `beta^2 <= 8 pi alpha (1 + 0.1)` at the plateau (cutoff only).
    pub quadratic_bound: Option<bool>,
}

pub fn atom_estimate(u: &Density, reg: RegKind, center: Point, ladder: &[f64]) -> AtomEstimate {
    let domain = u.domain();
    let d = domain.distance_to_boundary(center).unwrap_or(0.0);
    let radii: Vec<f64> = ladder.iter().copied().filter(|&r| r <= d).collect();
    let truncated = radii.len() < ladder.len();
    let eps = reg.epsilon();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for &r in &radii {
        let w = ball_weights(u, center, r);
        let a = apply_weights(u.values(), &w, |x| x);
        let b = match reg {
            RegKind::CutoffFlux { .. } => apply_weights(u.values(), &w, |x| reg.source_density(x.max(0.0))),
            RegKind::NonlinearDiffusion { .. } => apply_weights(u.values(), &w, |x| x + eps * x.max(0.0).powf(7.0 / 6.0)),
        };
        alpha.push(a);
        beta.push(b);
    }
    let gamma = beta.iter().map(|b| b * b).collect();
    let mut best: Option<(usize, f64)> = None;
    for k in 0..alpha.len().saturating_sub(2) {
        let w = &alpha[k..k + 3];
        let spread = w.iter().copied().fold(f64::NEG_INFINITY, f64::max) - w.iter().copied().fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(_, s)| spread < s) {
            best = Some((k, spread));
        }
    }
    let mean = |v: &[f64], k: usize| v[k..k + 3].iter().sum::<f64>() / 3.0;
    let (plateau_index, no_atom) = match best {
        Some((k, spread)) => (Some(k), !(spread <= 0.1 * mean(&alpha, k)) || mean(&alpha, k) <= 0.0),
        None => (None, true),
    };
    let plateau_alpha = plateau_index.map(|k| mean(&alpha, k));
    let plateau_beta = plateau_index.map(|k| mean(&beta, k));
    let (ratio, beta_below_alpha, quadratic_bound) = match reg {
        RegKind::NonlinearDiffusion { .. } => {
            (plateau_alpha.zip(plateau_beta).map(|(a, b)| a * a / (8.0 * PI * b)), None, None)
        }
        RegKind::CutoffFlux { .. } => (
            None,
            Some(alpha.iter().zip(&beta).all(|(a, b)| b <= a)),
            plateau_alpha.zip(plateau_beta).map(|(a, b)| b * b <= 8.0 * PI * a * 1.1),
        ),
    };
    AtomEstimate {
        center,
        rho_ladder: radii,
        alpha,
        beta,
        gamma,
        plateau_index,
        plateau_alpha,
        plateau_beta,
        no_atom,
        truncated,
        ratio,
        beta_below_alpha,
        quadratic_bound,
    }
}
