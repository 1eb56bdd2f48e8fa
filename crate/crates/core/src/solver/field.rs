//! Cell-centered fields on the rectangle and on the radial disk grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::Point;

/// Cell-centered values on `[0, nx hx] x [0, ny hy]`, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || !(hx > 0.0) || !(hy > 0.0) {
            return Err(Error::Invalid(format!("grid {nx} x {ny}, h = ({hx}, {hy})")));
        }
        if values.len() != nx * ny {
            return Err(Error::Invalid(format!("{} values for a {nx} x {ny} grid", values.len())));
        }
        Ok(Self { nx, ny, hx, hy, values })
    }

    /// Samples `f` at cell centers of a `width x height` rectangle.
    pub fn from_fn(nx: usize, ny: usize, width: f64, height: f64, f: impl Fn(Point) -> f64) -> Self {
        let hx = width / nx as f64;
        let hy = height / ny as f64;
        let values = (0..nx * ny)
            .map(|k| f([(k % nx) as f64 * hx + 0.5 * hx, (k / nx) as f64 * hy + 0.5 * hy]))
            .collect();
        Self { nx, ny, hx, hy, values }
    }

    pub fn constant(nx: usize, ny: usize, width: f64, height: f64, c: f64) -> Self {
        Self::from_fn(nx, ny, width, height, |_| c)
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.hx
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.hy
    }

    pub fn center(&self, k: usize) -> Point {
        [(k % self.nx) as f64 * self.hx + 0.5 * self.hx, (k / self.nx) as f64 * self.hy + 0.5 * self.hy]
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }
}

/// Radial faces `0 = r_0 < ... < r_n = 1`, geometrically refined toward the
/// center: the first cell has width `h_min` and widths grow by `ratio`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub h_min: f64,
    pub ratio: f64,
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    pub volumes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize, h_min: f64) -> Result<Self> {
        if n == 0 || !(h_min > 0.0) {
            return Err(Error::Invalid(format!("radial grid n = {n}, h_min = {h_min}")));
        }
        let (h_min, ratio) = if h_min * n as f64 >= 1.0 {
            (1.0 / n as f64, 1.0)
        } else {
            // total length h_min (q^n - 1)/(q - 1) is increasing in q
            let total = |q: f64| h_min * ((q.ln() * n as f64).exp_m1() / (q - 1.0));
            let (mut lo, mut hi) = (1.0 + 1e-15, 2.0);
            while total(hi) < 1.0 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (h_min, 0.5 * (lo + hi))
        };
        let mut faces = Vec::with_capacity(n + 1);
        faces.push(0.0);
        let mut w = h_min;
        for _ in 0..n {
            let last = *faces.last().unwrap();
            faces.push(last + w);
            w *= ratio;
        }
        // scale away the bisection residue so the outer face is exactly 1
        let outer = faces[n];
        for f in faces.iter_mut() {
            *f /= outer;
        }
        faces[n] = 1.0;
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes = faces
            .windows(2)
            .map(|w| std::f64::consts::PI * (w[1] * w[1] - w[0] * w[0]))
            .collect();
        Ok(Self { n, h_min, ratio, faces, centers, volumes })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, 1.0 / n as f64)
    }

    /// Index of the cell containing radius `r`.
    pub fn cell_of(&self, r: f64) -> usize {
        match self.faces.binary_search_by(|f| f.partial_cmp(&r).unwrap()) {
            Ok(k) => k.min(self.n - 1),
            Err(k) => (k.max(1) - 1).min(self.n - 1),
        }
    }
}

/// Radially symmetric density on the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.centers.iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }
}

/// Density on either backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Rect(Field),
    Radial(RadialField),
}

impl Density {
    pub fn values(&self) -> &[f64] {
        match self {
            Density::Rect(f) => &f.values,
            Density::Radial(f) => &f.values,
        }
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        match self {
            Density::Rect(f) => &mut f.values,
            Density::Radial(f) => &mut f.values,
        }
    }

    pub fn domain(&self) -> DomainGeometry {
        match self {
            Density::Rect(f) => DomainGeometry::rectangle(f.width(), f.height()).expect("positive grid"),
            Density::Radial(_) => DomainGeometry::unit_disk(),
        }
    }

    /// Same grid with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        let mut d = self.clone();
        d.values_mut().copy_from_slice(&values);
        d
    }

    /// Cell volumes, in the same order as the values.
    pub fn volumes(&self) -> Vec<f64> {
        match self {
            Density::Rect(f) => vec![f.cell_area(); f.values.len()],
            Density::Radial(f) => f.grid.volumes.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_spans_unit_interval() {
        let g = RadialGrid::new(400, 1e-3).unwrap();
        assert_eq!(g.faces[0], 0.0);
        assert_eq!(g.faces[400], 1.0);
        assert!((g.faces[1] - 1e-3).abs() < 1e-12);
        assert!(g.faces.windows(2).all(|w| w[1] > w[0]));
        let area: f64 = g.volumes.iter().sum();
        assert!((area - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(g.cell_of(0.0), 0);
        assert_eq!(g.cell_of(1.0), 399);
        assert_eq!(g.cell_of(0.5e-3), 0);
        let u = RadialGrid::new(10, 0.5).unwrap();
        assert_eq!(u.ratio, 1.0);
        assert!((u.faces[3] - 0.3).abs() < 1e-15);
    }
}
