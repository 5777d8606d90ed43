use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point has non-finite coordinate: {0:?}")]
    NonFiniteCoordinate(Vec<f64>),
    #[error("dimension {0} outside supported range 1..=8")]
    BadDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("points {0} and {1} coincide within tolerance (distance {2:e})")]
    DuplicatePoint(usize, usize, f64),
    #[error("point not a member of the configuration")]
    PointNotInConfig,
    #[error("configuration is empty")]
    EmptyConfig,
    #[error("radius assignment contains an infinite radius; operation needs finite grains")]
    InfiniteRadius,
    #[error("alternative radii violate the hard-core property (pair {0}, {1}, excess {2:e})")]
    HardCoreViolation(usize, usize, f64),
    #[error("fence parameters invalid: need 0 < width < s (got s={s}, width={width})")]
    BadFenceParams { s: f64, width: f64 },
    #[error("sphere cover not certifiable in dimension {dim} within budget")]
    CoverNotCertified { dim: usize },
    #[error("fence is not cover-certified")]
    UncertifiedFence,
    #[error("window must be a cube for face crossing")]
    NotACube,
    #[error("invalid window scale {0}")]
    BadWindowScale(f64),
    #[error("percolation sweep requires d >= 2 (enhanced model does not percolate in d = 1)")]
    PercolationDimension,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("certification failed after {attempts} attempts (final window scale {final_scale})")]
    CertificationFailed { attempts: u32, final_scale: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
