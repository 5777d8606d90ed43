//! Lilypond hard-core germ-grain model on finite point configurations:
//! exact radii construction, stabilization certificates, cluster
//! statistics, and certified Monte Carlo experiment harnesses.

pub mod clusters;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod lilypond;
pub mod sampling;
pub mod stabilization;
pub mod util;

pub use config::Config;
pub use error::{Error, Result};
pub use geometry::{ball_volume, unit_ball_volume, Point, Window, WindowShape, EPS_GEO};
pub use lilypond::{neighbour_graph, solve, verify, GrainGraph, RadiiAssignment, VerifyReport};
pub use sampling::{sample_binomial, sample_poisson, SeedSpec};
