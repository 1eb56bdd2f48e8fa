//! Partitions of unity built from bumps, patch-mass moduli and tracking of
//! concentration centers.

use crate::diagnostics::{detect_concentrations, M0_INTERIOR};
use crate::error::{Error, Result};
use crate::solver::{Density, Field, RadialField, Trajectory};
use crate::testfn::{phi, r_support};
use crate::vec2::{norm, sub};
use crate::Point;

pub const POU_TOL: f64 = 1e-8;

/// Cell weights of each patch; the weights sum to one in every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub patches: Vec<Vec<f64>>,
}

impl Cover {
    /// Checks the partition of unity cell by cell.
    pub fn new(patches: Vec<Vec<f64>>) -> Result<Self> {
        let n = patches.first().map(|p| p.len()).ok_or_else(|| Error::Invalid("empty cover".into()))?;
        if patches.iter().any(|p| p.len() != n) {
            return Err(Error::Invalid("patches of different lengths".into()));
        }
        for c in 0..n {
            let s: f64 = patches.iter().map(|p| p[c]).sum();
            if !((s - 1.0).abs() <= POU_TOL) || patches.iter().any(|p| p[c] < 0.0) {
                return Err(Error::Precondition(format!("not a partition of unity at cell {c}: sum = {s}")));
            }
        }
        Ok(Self { patches })
    }

    /// Normalizes raw nonnegative bump values; a cell no bump reaches is an
    /// error.
    pub fn normalized(raw: Vec<Vec<f64>>) -> Result<Self> {
        let n = raw.first().map(|p| p.len()).unwrap_or(0);
        let sums: Vec<f64> = (0..n).map(|c| raw.iter().map(|p| p[c]).sum()).collect();
        if let Some(c) = sums.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Precondition(format!("cover has a hole at cell {c}")));
        }
        Self::new(raw.into_iter().map(|p| p.iter().zip(&sums).map(|(a, s)| a / s).collect()).collect())
    }

    /// `tiles_x x tiles_y` bumps at tile centers, wide enough to reach the
    /// tile corners.
    pub fn rect_tiles(f: &Field, tiles_x: usize, tiles_y: usize) -> Result<Self> {
        let (a, b) = (f.width() / tiles_x as f64, f.height() / tiles_y as f64);
        let rho = (a * a + b * b).sqrt() / r_support();
        let mut raw = Vec::new();
        for j in 0..tiles_y {
            for i in 0..tiles_x {
                let c = [(i as f64 + 0.5) * a, (j as f64 + 0.5) * b];
                raw.push((0..f.values.len()).map(|k| phi(norm(sub(f.center(k), c)) / rho)).collect());
            }
        }
        Self::normalized(raw)
    }

    /// Rings `phi(|r - r_j| / rho)` with `r_j = j / (rings - 1)`.
    pub fn radial_rings(f: &RadialField, rings: usize) -> Result<Self> {
        if rings < 2 {
            return Err(Error::Invalid("a ring cover needs at least two rings".into()));
        }
        let h = 1.0 / (rings - 1) as f64;
        let rho = h / r_support();
        let raw = (0..rings)
            .map(|j| f.grid.centers.iter().map(|&r| phi((r - j as f64 * h).abs() / rho)).collect())
            .collect();
        Self::normalized(raw)
    }

    pub fn default_for(u: &Density) -> Result<Self> {
        match u {
            Density::Rect(f) => Self::rect_tiles(f, 4, 4),
            Density::Radial(f) => Self::radial_rings(f, 5),
        }
    }
}

/// Per-patch `max |Delta int psi u| / Delta t` over consecutive snapshots.
pub fn mass_change_modulus(traj: &Trajectory, cover: &Cover) -> Result<Vec<f64>> {
    let vols = traj.snapshots[0].u.volumes();
    if cover.patches[0].len() != vols.len() {
        return Err(Error::Invalid("cover and trajectory grids differ".into()));
    }
    let masses: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|s| {
            cover
                .patches
                .iter()
                .map(|p| s.u.values().iter().zip(p).zip(&vols).map(|((u, w), v)| u * w * v).sum())
                .collect()
        })
        .collect();
    let mut out = vec![0.0f64; cover.patches.len()];
    for k in 1..masses.len() {
        let dt = traj.snapshots[k].t - traj.snapshots[k - 1].t;
        if dt <= 0.0 {
            continue;
        }
        for (l, o) in out.iter_mut().enumerate() {
            *o = o.max((masses[k][l] - masses[k - 1][l]).abs() / dt);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub times: Vec<f64>,
    pub centers: Vec<Point>,
    /// `max |x(t_k) - x(t_{k-1})| / sqrt(t_k - t_{k-1})` over regular links.
    pub modulus: f64,
    /// Links whose jump exceeded ten times the track's typical modulus.
    pub reidentified: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// Tracks seen on at least three consecutive snapshots.
    pub tracks: Vec<Track>,
    pub max_modulus: f64,
    pub reidentifications: usize,
}

/// Concentration centers of each snapshot at detection radius `rho`.
pub fn center_series(traj: &Trajectory, rho: f64) -> Vec<(f64, Vec<Point>)> {
    traj.snapshots.iter().map(|s| (s.t, detect_concentrations(&s.u, M0_INTERIOR, rho))).collect()
}

/// Links centers of consecutive snapshots to their nearest neighbor within
/// `link` and reports the square-root Hoelder modulus of every track.
pub fn singular_set_continuity_check(series: &[(f64, Vec<Point>)], link: f64) -> ContinuityReport {
    let mut done: Vec<Track> = Vec::new();
    let mut open: Vec<Track> = Vec::new();
    for (t, centers) in series {
        let mut taken = vec![false; centers.len()];
        let mut next = Vec::new();
        for mut tr in open.drain(..) {
            let last = *tr.centers.last().expect("tracks are never empty");
            let best = centers
                .iter()
                .enumerate()
                .filter(|(k, _)| !taken[*k])
                .map(|(k, c)| (k, norm(sub(*c, last))))
                .filter(|&(_, d)| d <= link)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            match best {
                Some((k, _)) => {
                    taken[k] = true;
                    tr.times.push(*t);
                    tr.centers.push(centers[k]);
                    next.push(tr);
                }
                None => done.push(tr),
            }
        }
        for (c, _) in centers.iter().zip(&taken).filter(|(_, t)| !**t) {
            next.push(Track { times: vec![*t], centers: vec![*c], modulus: 0.0, reidentified: 0 });
        }
        open = next;
    }
    done.extend(open);
    let mut tracks: Vec<Track> = done.into_iter().filter(|t| t.times.len() >= 3).collect();
    for tr in &mut tracks {
        let steps: Vec<f64> = tr
            .times
            .windows(2)
            .zip(tr.centers.windows(2))
            .map(|(t, c)| norm(sub(c[1], c[0])) / (t[1] - t[0]).max(f64::MIN_POSITIVE).sqrt())
            .collect();
        let mut sorted = steps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let typical = sorted[sorted.len() / 2];
        let (jumps, regular): (Vec<f64>, Vec<f64>) = steps.iter().partition(|&&s| s > 10.0 * typical && s > 0.0);
        tr.reidentified = jumps.len();
        tr.modulus = regular.into_iter().fold(0.0, f64::max);
    }
    ContinuityReport {
        max_modulus: tracks.iter().map(|t| t.modulus).fold(0.0, f64::max),
        reidentifications: tracks.iter().map(|t| t.reidentified).sum(),
        tracks,
    }
}
