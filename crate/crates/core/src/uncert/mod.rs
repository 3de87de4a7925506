//! Convergence-radius estimates for Taylor maps and exact moment
//! propagation of independent initial uncertainty.

mod moments;
mod radius;
mod requirement;

pub use moments::{
    expected_monomial, propagate_moments, propagate_with, uniform_raw_moment, MomentOrder,
    MomentSet, RawMoments, UniformBox,
};
pub use radius::{
    ch_radius, per_state_radius_sweep, ratio_radius, RadiusEstimate, RadiusSweep, Restriction,
    SweepRow,
};
pub use requirement::{requirement_check, Predicate, RequirementResult};

use thiserror::Error;

use crate::polyalg::PolyError;

#[derive(Debug, Error)]
pub enum UncertError {
    #[error("no nonzero coefficients of degree ≥ 1 under {0}")]
    NoCoefficients(String),
    #[error("ratio test needs two consecutive nonzero degree slices")]
    TooFewSlices,
    #[error("invalid bounds for variable {var}: [{a}, {b}]")]
    Bounds { var: usize, a: f64, b: f64 },
    #[error("uniform moment needs a < b, got [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("variable {index} is `{found}` in the box but `{expected}` in the map")]
    LabelMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("central moments are supported up to order 4, requested {0}")]
    MomentOrder(usize),
    #[error("map order {map} is below the requested sweep order {requested}")]
    SweepOrder { map: usize, requested: usize },
    #[error("covariance is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("requirement check needs at least one component and one sample")]
    EmptyCheck,
    #[error("component index {0} is out of range")]
    Component(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}
