//! Finite-volume scheme on the rectangle.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::dct::Dct;
use super::{diffusivity, face_dissipation, CellTerms, Scheme, Switches};

/// Neumann Poisson solver for the 5-point Laplacian, diagonalised by DCT-II.
pub struct RectPoisson {
    nx: usize,
    ny: usize,
    dct_x: Dct,
    dct_y: Dct,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl RectPoisson {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        let eig = |n: usize, h: f64| -> Vec<f64> {
            (0..n)
                .map(|k| (2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h))
                .collect()
        };
        Self { nx, ny, dct_x: Dct::new(nx), dct_y: Dct::new(ny), eig_x: eig(nx, hx), eig_y: eig(ny, hy) }
    }

    fn rows(&self, data: &mut [f64], n: usize, dct: &Dct, inverse: bool) {
        data.par_chunks_mut(n).for_each_init(
            || (Vec::<Complex64>::new(), vec![0.0; n]),
            |(buf, out), row| {
                if inverse {
                    dct.inverse(row, out, buf);
                } else {
                    dct.forward(row, out, buf);
                }
                row.copy_from_slice(out);
            },
        );
    }

    fn transpose(data: &[f64], nx: usize, ny: usize) -> Vec<f64> {
        let mut t = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                t[i * ny + j] = data[j * nx + i];
            }
        }
        t
    }

    /// Solves `-Lap v = rhs` with the mean mode removed; `v` has zero mean.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut a = rhs.to_vec();
        self.rows(&mut a, nx, &self.dct_x, false);
        let mut t = Self::transpose(&a, nx, ny);
        self.rows(&mut t, ny, &self.dct_y, false);
        for i in 0..nx {
            for j in 0..ny {
                let lam = self.eig_x[i] + self.eig_y[j];
                let k = i * ny + j;
                t[k] = if lam > 0.0 { t[k] / lam } else { 0.0 };
            }
        }
        self.rows(&mut t, ny, &self.dct_y, true);
        let mut v = Self::transpose(&t, ny, nx);
        self.rows(&mut v, nx, &self.dct_x, true);
        v
    }
}

pub struct RectScheme {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    volumes: Vec<f64>,
    poisson: RectPoisson,
    v: Vec<f64>,
    /// `dv/dx` on interior vertical faces, `(nx - 1)` per row.
    wx: Vec<f64>,
    /// `dv/dy` on interior horizontal faces, `nx` per face row.
    wy: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
}

impl RectScheme {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        Self {
            nx,
            ny,
            hx,
            hy,
            volumes: vec![hx * hy; nx * ny],
            poisson: RectPoisson::new(nx, ny, hx, hy),
            v: vec![0.0; nx * ny],
            wx: vec![0.0; (nx - 1) * ny],
            wy: vec![0.0; nx * (ny - 1)],
            fx: vec![0.0; (nx - 1) * ny],
            fy: vec![0.0; nx * (ny - 1)],
        }
    }
}

impl Scheme for RectScheme {
    fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    fn potential(&self) -> &[f64] {
        &self.v
    }

    fn set_source(&mut self, g: &[f64]) {
        let (nx, ny) = (self.nx, self.ny);
        if g.iter().all(|&x| x == 0.0) {
            self.v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            self.v = self.poisson.solve(g);
        }
        let v = &self.v;
        for j in 0..ny {
            for i in 0..nx - 1 {
                self.wx[j * (nx - 1) + i] = (v[j * nx + i + 1] - v[j * nx + i]) / self.hx;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                self.wy[j * nx + i] = (v[(j + 1) * nx + i] - v[j * nx + i]) / self.hy;
            }
        }
    }

    fn rate_bound(&self, _u: &[f64], root6: &[f64], sw: &Switches) -> f64 {
        let (nx, ny, hx, hy) = (self.nx, self.ny, self.hx, self.hy);
        let adv = if sw.advection { 1.0 } else { 0.0 };
        (0..ny)
            .into_par_iter()
            .map(|j| {
                let mut m = 0.0f64;
                for i in 0..nx {
                    let k = j * nx + i;
                    let mut r = 0.0;
                    if i > 0 {
                        r += diffusivity(sw, root6[k - 1], root6[k]) / (hx * hx)
                            + adv * (-self.wx[j * (nx - 1) + i - 1]).max(0.0) / hx;
                    }
                    if i + 1 < nx {
                        r += diffusivity(sw, root6[k], root6[k + 1]) / (hx * hx)
                            + adv * self.wx[j * (nx - 1) + i].max(0.0) / hx;
                    }
                    if j > 0 {
                        r += diffusivity(sw, root6[k - nx], root6[k]) / (hy * hy)
                            + adv * (-self.wy[(j - 1) * nx + i]).max(0.0) / hy;
                    }
                    if j + 1 < ny {
                        r += diffusivity(sw, root6[k], root6[k + nx]) / (hy * hy)
                            + adv * self.wy[j * nx + i].max(0.0) / hy;
                    }
                    m = m.max(r);
                }
                m
            })
            .reduce(|| 0.0, f64::max)
    }

    fn advance(&mut self, u: &mut [f64], root6: &[f64], dt: f64, sw: &Switches) {
        let (nx, ny, hx, hy) = (self.nx, self.ny, self.hx, self.hy);
        let uu: &[f64] = u;
        let flux = |a: usize, b: usize, w: f64, h: f64| -> f64 {
            let d = diffusivity(sw, root6[a], root6[b]);
            let mut f = -d * (uu[b] - uu[a]) / h;
            if sw.advection {
                let up = if w > 0.0 { uu[a] } else { uu[b] };
                f += sw.advected(up) * w;
            }
            f
        };
        let (wx, wy) = (&self.wx, &self.wy);
        self.fx.par_chunks_mut(nx - 1).enumerate().for_each(|(j, row)| {
            for (i, f) in row.iter_mut().enumerate() {
                let k = j * nx + i;
                *f = flux(k, k + 1, wx[j * (nx - 1) + i], hx);
            }
        });
        self.fy.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, f) in row.iter_mut().enumerate() {
                let k = j * nx + i;
                *f = flux(k, k + nx, wy[j * nx + i], hy);
            }
        });
        let (fx, fy) = (&self.fx, &self.fy);
        u.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, x) in row.iter_mut().enumerate() {
                let mut div = 0.0;
                if i + 1 < nx {
                    div += fx[j * (nx - 1) + i] / hx;
                }
                if i > 0 {
                    div -= fx[j * (nx - 1) + i - 1] / hx;
                }
                if j + 1 < ny {
                    div += fy[j * nx + i] / hy;
                }
                if j > 0 {
                    div -= fy[(j - 1) * nx + i] / hy;
                }
                *x -= dt * div;
            }
        });
    }

    fn field_energy_and_dissipation(&self, c: &CellTerms, eps: f64) -> (f64, f64) {
        let (nx, ny, hx, hy) = (self.nx, self.ny, self.hx, self.hy);
        let cell = hx * hy;
        let mut grad2 = 0.0;
        let mut diss = 0.0;
        for j in 0..ny {
            for i in 0..nx - 1 {
                let k = j * nx + i;
                let w = self.wx[j * (nx - 1) + i];
                grad2 += w * w * cell;
                diss += face_dissipation(c, k, k + 1, w, hx, eps) * cell;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let k = j * nx + i;
                let w = self.wy[j * nx + i];
                grad2 += w * w * cell;
                diss += face_dissipation(c, k, k + nx, w, hy, eps) * cell;
            }
        }
        (grad2, diss)
    }
}
