//! Interior and boundary test functions for local mass estimates.

mod bump;

pub use bump::{build_boundary_bump, verify_bump, BoundaryBump, BumpParams, BumpReport};

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, DomainKind};
use crate::vec2::{mat_add, mat_scale, norm, outer, scale, sub, trace, Mat2};
use crate::Point;

/// Value, gradient and Hessian of a test function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestEval {
    pub value: f64,
    pub grad: Point,
    pub hess: Mat2,
}

impl TestEval {
    pub const ZERO: TestEval = TestEval { value: 0.0, grad: [0.0, 0.0], hess: [[0.0; 2]; 2] };

    pub fn laplacian(&self) -> f64 {
        trace(&self.hess)
    }
}

/// `e^{1/4}`, end of the logarithmic piece.
pub fn r_log() -> f64 {
    0.25f64.exp()
}

/// `3 e^{1/4} / 2`, end of the support.
pub fn r_support() -> f64 {
    1.5 * 0.25f64.exp()
}

/// Four-piece radial profile: quadratic, logarithmic, quadratic, zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub breakpoints: [f64; 3],
}

impl Default for RadialProfile {
    fn default() -> Self {
        Self { breakpoints: [1.0, r_log(), r_support()] }
    }
}

impl RadialProfile {
    /// `(phi, phi', phi'')` at `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let [r1, r2, r3] = self.breakpoints;
        if r <= r1 {
            (1.0 - 0.5 * r * r, -r, -1.0)
        } else if r <= r2 {
            (0.5 - r.ln(), -1.0 / r, 1.0 / (r * r))
        } else if r < r3 {
            let k = (-0.5f64).exp();
            let s = r3 - r;
            (k * s * s, -2.0 * k * s, 2.0 * k)
        } else {
            (0.0, 0.0, 0.0)
        }
    }

    /// One-sided first derivatives `(left, right)` at a breakpoint, each
    /// computed from the formula of the adjacent piece.
    pub fn one_sided_derivatives(&self, i: usize) -> (f64, f64) {
        let [r1, r2, r3] = self.breakpoints;
        let k = (-0.5f64).exp();
        match i {
            0 => (-r1, -1.0 / r1),
            1 => (-1.0 / r2, -2.0 * k * (r3 - r2)),
            // the last quadratic has a double root at r3
            _ => (0.0, 0.0),
        }
    }

    /// One-sided values `(left, right)` at a breakpoint.
    pub fn one_sided_values(&self, i: usize) -> (f64, f64) {
        let [r1, r2, r3] = self.breakpoints;
        let k = (-0.5f64).exp();
        match i {
            0 => (1.0 - 0.5 * r1 * r1, 0.5 - r1.ln()),
            1 => (0.5 - r2.ln(), k * (r3 - r2) * (r3 - r2)),
            _ => (0.0, 0.0),
        }
    }
}

pub fn phi(r: f64) -> f64 {
    RadialProfile::default().eval(r).0
}

/// Radial bump `phi(|x - x0| / rho)` supported inside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorBump {
    pub x0: Point,
    pub rho: f64,
    profile: RadialProfile,
}

impl InteriorBump {
    pub fn new(domain: &DomainGeometry, x0: Point, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Invalid(format!("rho = {rho}")));
        }
        let d = domain.distance_to_boundary(x0)?;
        if d < r_support() * rho {
            return Err(Error::Precondition(format!(
                "support radius {:.6} exceeds distance {d:.6} to the boundary",
                r_support() * rho
            )));
        }
        Ok(Self { x0, rho, profile: RadialProfile::default() })
    }

    /// Bump without any domain check, for use on unbounded test problems.
    pub fn free(x0: Point, rho: f64) -> Self {
        Self { x0, rho, profile: RadialProfile::default() }
    }

    pub fn support_radius(&self) -> f64 {
        r_support() * self.rho
    }

    pub fn eval(&self, x: Point) -> TestEval {
        let dx = sub(x, self.x0);
        let r = norm(dx);
        let s = r / self.rho;
        let (p, dp, ddp) = self.profile.eval(s);
        let i2 = 1.0 / (self.rho * self.rho);
        if r == 0.0 {
            return TestEval { value: p, grad: [0.0, 0.0], hess: [[-i2, 0.0], [0.0, -i2]] };
        }
        let e = scale(1.0 / r, dx);
        let ee = outer(e, e);
        let tang = [[1.0 - ee[0][0], -ee[0][1]], [-ee[1][0], 1.0 - ee[1][1]]];
        let hess = mat_add(&mat_scale(ddp * i2, &ee), &mat_scale(dp * i2 / s, &tang));
        TestEval { value: p, grad: scale(dp / self.rho, e), hess }
    }
}

/// Convenience form of [`InteriorBump::eval`] with the domain check.
pub fn psi_interior(domain: &DomainGeometry, x: Point, x0: Point, rho: f64) -> Result<TestEval> {
    Ok(InteriorBump::new(domain, x0, rho)?.eval(x))
}

/// Test function for a probe `(x0, rho)`: the radial bump when its support
/// fits inside the domain, otherwise the boundary bump (disk only).
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Interior(InteriorBump),
    Boundary(BoundaryBump),
}

impl TestFunction {
    pub fn for_probe(domain: &DomainGeometry, x0: Point, rho: f64) -> Result<Self> {
        let d = domain.distance_to_boundary(x0)?;
        if d >= r_support() * rho {
            return Ok(TestFunction::Interior(InteriorBump::new(domain, x0, rho)?));
        }
        if domain.kind != DomainKind::UnitDisk {
            return Err(Error::UnsupportedDomain(format!(
                "probe at depth {d:.4} with rho = {rho} needs a boundary bump; only the disk has one"
            )));
        }
        Ok(TestFunction::Boundary(build_boundary_bump(domain, x0, rho, BumpParams::default())?))
    }

    pub fn x0(&self) -> Point {
        match self {
            TestFunction::Interior(b) => b.x0,
            TestFunction::Boundary(b) => b.x0,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            TestFunction::Interior(b) => b.rho,
            TestFunction::Boundary(b) => b.rho,
        }
    }

    /// Radius around `x0` outside which the function vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            TestFunction::Interior(b) => b.support_radius(),
            TestFunction::Boundary(b) => b.support_multiplier() * b.rho,
        }
    }

    pub fn value(&self, x: Point) -> f64 {
        match self {
            TestFunction::Interior(b) => b.eval(x).value,
            TestFunction::Boundary(b) => b.value(x),
        }
    }

    pub fn eval(&self, x: Point) -> TestEval {
        match self {
            TestFunction::Interior(b) => b.eval(x),
            TestFunction::Boundary(b) => b.eval(x),
        }
    }
}
