use thiserror::Error;

use crate::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0:?} lies outside the closed domain")]
    OutsideDomain(Point),
    #[error("boundary frame undefined at {0:?}")]
    FrameUndefined(Point),
    #[error("operation not available on this domain: {0}")]
    UnsupportedDomain(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("negative argument {0} where a nonnegative value is required")]
    Negative(f64),
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("positivity lost: min u = {min:e}")]
    Positivity { min: f64 },
    #[error("right-hand side mean {0:e} is not zero")]
    NonZeroMean(f64),
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
