//! Finite-volume scheme for radially symmetric data on the unit disk.
//!
//! Fluxes live on the interior faces `r_1 .. r_{n-1}`; the center and the
//! outer circle carry no flux. The Poisson equation is integrated exactly
//! for piecewise-constant sources: `r v'(r_j) = -(1/2pi) sum_{i<j} g_i V_i`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::field::RadialGrid;
use super::{diffusivity, face_dissipation, CellTerms, Scheme, Switches};

pub struct RadialScheme {
    grid: Arc<RadialGrid>,
    /// `2 pi r_j` for each face, zero at both ends.
    area: Vec<f64>,
    /// Center-to-center spacing across face `j`.
    gap: Vec<f64>,
    /// `v'(r_j)`.
    w: Vec<f64>,
    v: Vec<f64>,
    flux: Vec<f64>,
}

impl RadialScheme {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n;
        let mut area = vec![0.0; n + 1];
        let mut gap = vec![1.0; n + 1];
        for j in 1..n {
            area[j] = 2.0 * PI * grid.faces[j];
            gap[j] = grid.centers[j] - grid.centers[j - 1];
        }
        Self { grid, area, gap, w: vec![0.0; n + 1], v: vec![0.0; n], flux: vec![0.0; n + 1] }
    }
}

/// Face gradients and zero-mean cell values of the radial Neumann potential.
pub fn radial_potential(grid: &RadialGrid, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let mut w = vec![0.0; n + 1];
    let mut acc = 0.0;
    for j in 1..n {
        acc += g[j - 1] * grid.volumes[j - 1];
        w[j] = -acc / (2.0 * PI * grid.faces[j]);
    }
    let mut v = vec![0.0; n];
    for j in 1..n {
        v[j] = v[j - 1] + w[j] * (grid.centers[j] - grid.centers[j - 1]);
    }
    let mean = v.iter().zip(&grid.volumes).map(|(a, b)| a * b).sum::<f64>() / PI;
    v.iter_mut().for_each(|x| *x -= mean);
    (w, v)
}

impl Scheme for RadialScheme {
    fn volumes(&self) -> &[f64] {
        &self.grid.volumes
    }

    fn potential(&self) -> &[f64] {
        &self.v
    }

    fn set_source(&mut self, g: &[f64]) {
        let (w, v) = radial_potential(&self.grid, g);
        self.w = w;
        self.v = v;
    }

    fn rate_bound(&self, _u: &[f64], root6: &[f64], sw: &Switches) -> f64 {
        let n = self.grid.n;
        let adv = if sw.advection { 1.0 } else { 0.0 };
        let mut m = 0.0f64;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.area[i]
                    * (diffusivity(sw, root6[i - 1], root6[i]) / self.gap[i] + adv * (-self.w[i]).max(0.0));
            }
            if i + 1 < n {
                r += self.area[i + 1]
                    * (diffusivity(sw, root6[i], root6[i + 1]) / self.gap[i + 1]
                        + adv * self.w[i + 1].max(0.0));
            }
            m = m.max(r / self.grid.volumes[i]);
        }
        m
    }

    fn advance(&mut self, u: &mut [f64], root6: &[f64], dt: f64, sw: &Switches) {
        let n = self.grid.n;
        for j in 1..n {
            let (a, b) = (u[j - 1], u[j]);
            let mut f = -diffusivity(sw, root6[j - 1], root6[j]) * (b - a) / self.gap[j];
            if sw.advection {
                let w = self.w[j];
                let up = if w > 0.0 { a } else { b };
                f += sw.advected(up) * w;
            }
            self.flux[j] = self.area[j] * f;
        }
        for i in 0..n {
            u[i] -= dt * (self.flux[i + 1] - self.flux[i]) / self.grid.volumes[i];
        }
    }

    fn field_energy_and_dissipation(&self, c: &CellTerms, eps: f64) -> (f64, f64) {
        let mut grad2 = 0.0;
        let mut diss = 0.0;
        for j in 1..self.grid.n {
            let vol = self.area[j] * self.gap[j];
            grad2 += self.w[j] * self.w[j] * vol;
            diss += face_dissipation(c, j - 1, j, self.w[j], self.gap[j], eps) * vol;
        }
        (grad2, diss)
    }
}
