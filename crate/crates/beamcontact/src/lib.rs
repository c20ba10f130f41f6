//! Closest-point-projection geometry for beam-to-beam contact.
//!
//! The crate is organized around the contact-detection pipeline for slender
//! beams with circular cross-sections:
//!
//! - [`curves`]: parametric space curves (lines, arcs, helices, Hermite
//!   splines, parallel-offset curves) with analytic derivatives.
//! - [`diffgeo`]: Frenet-Serret frames, contact angles and the kinematic
//!   quantities entering the uniqueness criteria.
//! - [`projection`]: unilateral / bilateral / tube-surface closest-point
//!   projections via multi-start Newton iteration, plus an independent
//!   brute-force sampling oracle for multiplicity classification.
//! - [`criteria`]: the general and simplified (worst-case) existence and
//!   uniqueness criteria for the bilateral projection.
//! - [`scenarios`]: the degenerate constant-distance geometries (parallel
//!   lines, straight + circle, straight + helix, parallel offset curves)
//!   wired through the full pipeline.
//! - [`cli`]: scene parsing and the command-line front end.

pub mod cli;
pub mod criteria;
pub mod curves;
pub mod diffgeo;
pub mod projection;
pub mod scenarios;

pub use curves::{Curve, NormalField, ParamPoint, Vec3};
pub use diffgeo::{ContactKinematics, FrenetData};
pub use projection::{CppState, MultiplicityClass, MultiplicityReport, SolverSettings};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter {t} outside curve interval [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("invalid curve definition: {0}")]
    InvalidCurve(String),

    #[error("degenerate parametrization: {0}")]
    DegenerateParametrization(String),

    #[error("Frenet frame undefined: {0}")]
    DegenerateFrame(String),

    #[error("projection failed: {0}")]
    ProjectionFailure(String),

    #[error("tube-surface angular coordinate is ill-posed: {0}")]
    AmbiguousTheta(String),

    #[error("invalid contact kinematics: {0}")]
    InvalidKinematics(String),

    #[error("assumption ii) violated: mu_max = {0} is not < 0.5")]
    AssumptionViolated(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
