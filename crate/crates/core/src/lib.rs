//! Numerical laboratory for the regularized parabolic-elliptic Keller-Segel
//! system on the unit disk and on rectangles.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod manifest;
pub mod problem;
pub mod quad;
pub mod solver;
pub mod sweep;
pub mod testfn;
pub mod vec2;
pub mod weakform;
pub mod verify;

pub use error::{Error, Result};

/// A point or vector of the plane.
pub type Point = [f64; 2];
