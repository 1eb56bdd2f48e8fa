//! Grid and initial-data descriptors shared by runs, sweeps and configs.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::solver::{Density, Field, RadialField, RadialGrid};
use crate::vec2::{norm, sub};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// Unit disk, radially symmetric data; `h_min` is the innermost ring
    /// width of the geometric grid (`h_min = 1/n` gives a uniform grid).
    Radial { n: usize, h_min: f64 },
    Rect { nx: usize, ny: usize, width: f64, height: f64 },
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GridSpec::Radial { n, h_min } => n >= 2 && h_min > 0.0 && h_min * n as f64 <= 1.0 + 1e-12,
            GridSpec::Rect { nx, ny, width, height } => nx >= 2 && ny >= 2 && width > 0.0 && height > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("grid {self:?}")))
        }
    }

    /// Density with the values of `f` at cell centers.
    pub fn sample(&self, f: impl Fn(Point) -> f64) -> Result<Density> {
        self.validate()?;
        Ok(match *self {
            GridSpec::Radial { n, h_min } => {
                let grid = if (h_min * n as f64 - 1.0).abs() <= 1e-12 {
                    RadialGrid::uniform(n)?
                } else {
                    RadialGrid::new(n, h_min)?
                };
                Density::Radial(RadialField::from_fn(Arc::new(grid), |r| f([r, 0.0])))
            }
            GridSpec::Rect { nx, ny, width, height } => Density::Rect(Field::from_fn(nx, ny, width, height, f)),
        })
    }
}

/// Initial density catalog. Profiles are rescaled so that the discrete mass
/// equals `mass` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `exp(-|x - c|^2 / (2 sigma^2))`.
    Gaussian { mass: f64, center: Point, sigma: f64 },
    /// `exp(-(|x - c| - radius)^2 / (2 sigma^2))`.
    Annulus { mass: f64, center: Point, radius: f64, sigma: f64 },
    Constant { value: f64 },
    /// Two Gaussians of equal mass at `c -+ (separation/2, 0)`.
    TwoBump { mass: f64, center: Point, separation: f64, sigma: f64 },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialData::Gaussian { mass, sigma, .. } => mass > 0.0 && sigma > 0.0,
            InitialData::Annulus { mass, radius, sigma, .. } => mass > 0.0 && radius > 0.0 && sigma > 0.0,
            InitialData::Constant { value } => value > 0.0,
            InitialData::TwoBump { mass, separation, sigma, .. } => mass > 0.0 && separation > 0.0 && sigma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("initial data {self:?}")))
        }
    }

    fn profile(&self, x: Point) -> f64 {
        let g = |c: Point, s: f64| {
            let r = norm(sub(x, c));
            (-r * r / (2.0 * s * s)).exp()
        };
        match *self {
            InitialData::Gaussian { center, sigma, .. } => g(center, sigma),
            InitialData::Annulus { center, radius, sigma, .. } => {
                let r = norm(sub(x, center)) - radius;
                (-r * r / (2.0 * sigma * sigma)).exp()
            }
            InitialData::Constant { value } => value,
            InitialData::TwoBump { center, separation, sigma, .. } => {
                let h = 0.5 * separation;
                g([center[0] - h, center[1]], sigma) + g([center[0] + h, center[1]], sigma)
            }
        }
    }

    fn mass(&self) -> Option<f64> {
        match *self {
            InitialData::Gaussian { mass, .. }
            | InitialData::Annulus { mass, .. }
            | InitialData::TwoBump { mass, .. } => Some(mass),
            InitialData::Constant { .. } => None,
        }
    }

    /// Samples the profile, applies the seeded multiplicative noise
    /// `1 + noise U(-1, 1)` and fixes the mass.
    pub fn build(&self, grid: &GridSpec, noise: f64, seed: u64) -> Result<Density> {
        self.validate()?;
        if !(0.0..1.0).contains(&noise) {
            return Err(Error::Invalid(format!("noise {noise} must lie in [0, 1)")));
        }
        if let (GridSpec::Radial { .. }, InitialData::Gaussian { center, .. } | InitialData::Annulus { center, .. }) =
            (grid, self)
        {
            if norm(*center) != 0.0 {
                return Err(Error::Invalid("radial data must be centered at the origin".into()));
            }
        }
        if let (GridSpec::Radial { .. }, InitialData::TwoBump { .. }) = (grid, self) {
            return Err(Error::Invalid("two bumps are not radially symmetric".into()));
        }
        let mut u = grid.sample(|x| self.profile(x))?;
        if noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in u.values_mut() {
                *v *= 1.0 + noise * rng.gen_range(-1.0..1.0);
            }
        }
        if let Some(m) = self.mass() {
            let cur: f64 = u.values().iter().zip(u.volumes()).map(|(a, b)| a * b).sum();
            if !(cur > 0.0) {
                return Err(Error::Invalid("initial profile vanishes on the grid".into()));
            }
            let s = m / cur;
            u.values_mut().iter_mut().for_each(|v| *v *= s);
        }
        Ok(u)
    }

    /// Peak of the continuum Gaussian with this mass, for reference.
    pub fn gaussian_peak(mass: f64, sigma: f64) -> f64 {
        mass / (2.0 * PI * sigma * sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses_are_exact() {
        let g = GridSpec::Radial { n: 100, h_min: 2e-3 };
        let u = InitialData::Gaussian { mass: 12.0 * PI, center: [0.0, 0.0], sigma: 0.3 }.build(&g, 0.0, 0).unwrap();
        let m: f64 = u.values().iter().zip(u.volumes()).map(|(a, b)| a * b).sum();
        assert!((m - 12.0 * PI).abs() < 1e-12);
        let r = GridSpec::Rect { nx: 40, ny: 30, width: 2.0, height: 1.0 };
        let u = InitialData::TwoBump { mass: 3.0, center: [1.0, 0.5], separation: 0.8, sigma: 0.1 }
            .build(&r, 0.1, 7)
            .unwrap();
        let m: f64 = u.values().iter().zip(u.volumes()).map(|(a, b)| a * b).sum();
        assert!((m - 3.0).abs() < 1e-12);
        let c = InitialData::Constant { value: 2.0 }.build(&r, 0.0, 0).unwrap();
        assert!(c.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn radial_restrictions() {
        let g = GridSpec::Radial { n: 10, h_min: 0.1 };
        assert!(InitialData::Gaussian { mass: 1.0, center: [0.1, 0.0], sigma: 0.3 }.build(&g, 0.0, 0).is_err());
        assert!(InitialData::TwoBump { mass: 1.0, center: [0.0, 0.0], separation: 0.3, sigma: 0.1 }
            .build(&g, 0.0, 0)
            .is_err());
        assert!(InitialData::Constant { value: -1.0 }.build(&g, 0.0, 0).is_err());
    }
}
