//! Geometric oracle for the reference domains.
//!
//! The unit disk carries every boundary quantity in closed form (distance,
//! outward normal, tangent, curvature, projection, reflection). The
//! rectangle exists for the 2D solver only; its corners are not smooth, so
//! it answers distance queries and refuses the rest.

use crate::error::{Error, Result};
use crate::vec2::{add, norm, rot90, scale};
use crate::Point;

/// Slack used when deciding whether a point belongs to the closed domain.
const CONTAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    UnitDisk,
    /// `[0, width] x [0, height]`.
    Rectangle { width: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainGeometry {
    pub kind: DomainKind,
    /// Half-width of the boundary collar.
    pub sigma0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub d: f64,
    pub nu: Point,
    pub tau_vec: Point,
    pub h: f64,
    pub p_boundary: Point,
}

impl DomainGeometry {
    pub fn unit_disk() -> Self {
        Self { kind: DomainKind::UnitDisk, sigma0: 0.25 }
    }

    pub fn unit_disk_with_sigma0(sigma0: f64) -> Result<Self> {
        // inradius of the unit disk is 1
        if !(sigma0 > 0.0 && 2.0 * sigma0 < 1.0) {
            return Err(Error::Invalid(format!("sigma0 = {sigma0} must lie in (0, 1/2)")));
        }
        Ok(Self { kind: DomainKind::UnitDisk, sigma0 })
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::Invalid(format!("rectangle {width} x {height}")));
        }
        let sigma0 = 0.25 * width.min(height);
        Ok(Self { kind: DomainKind::Rectangle { width, height }, sigma0 })
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => std::f64::consts::PI,
            DomainKind::Rectangle { width, height } => width * height,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match self.kind {
            DomainKind::UnitDisk => norm(x) <= 1.0 + CONTAIN_TOL,
            DomainKind::Rectangle { width, height } => {
                x[0] >= -CONTAIN_TOL
                    && x[1] >= -CONTAIN_TOL
                    && x[0] <= width + CONTAIN_TOL
                    && x[1] <= height + CONTAIN_TOL
            }
        }
    }

    pub fn distance_to_boundary(&self, x: Point) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain(x));
        }
        Ok(match self.kind {
            DomainKind::UnitDisk => (1.0 - norm(x)).max(0.0),
            DomainKind::Rectangle { width, height } => {
                x[0].min(width - x[0]).min(x[1]).min(height - x[1]).max(0.0)
            }
        })
    }

    fn require_disk(&self, op: &str) -> Result<()> {
        match self.kind {
            DomainKind::UnitDisk => Ok(()),
            DomainKind::Rectangle { .. } => Err(Error::UnsupportedDomain(format!(
                "{op} needs a smooth boundary; the rectangle has corners"
            ))),
        }
    }

    pub fn boundary_frame(&self, x: Point) -> Result<BoundaryFrame> {
        self.require_disk("boundary_frame")?;
        if !self.contains(x) {
            return Err(Error::OutsideDomain(x));
        }
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::FrameUndefined(x));
        }
        let nu = scale(1.0 / r, x);
        let d = (1.0 - r).max(0.0);
        Ok(BoundaryFrame {
            d,
            nu,
            tau_vec: rot90(nu),
            h: 1.0 / r,
            p_boundary: nu,
        })
    }

    /// Reflection `y + (2d + h d^2) nu` across the boundary.
    pub fn reflect_tau(&self, y: Point) -> Result<Point> {
        let f = self.boundary_frame(y)?;
        let shift = 2.0 * f.d + f.h * f.d * f.d;
        Ok(add(y, scale(shift, f.nu)))
    }

    pub fn in_collar(&self, x: Point) -> bool {
        self.distance_to_boundary(x).map(|d| d <= 2.0 * self.sigma0).unwrap_or(false)
    }
}
