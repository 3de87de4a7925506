//! Truncated multivariate Taylor polynomial algebra.

mod algebra;
mod layout;
mod map;
mod series;
mod tpoly;

pub use algebra::Algebra;
pub use layout::{monomial_count, MultiIndex, MAX_ORDER, MAX_VARS};
pub use map::{TaylorMap, VarLabel};
pub use series::{scalar, AnalyticFn};
pub use tpoly::TPoly;

pub(crate) use layout::factorial;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("unsupported polynomial shape: {nvars} variables at order {order}")]
    UnsupportedShape { nvars: usize, order: usize },
    #[error("truncation order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("variable index {index} out of range for {nvars} variables")]
    VariableOutOfRange { index: usize, nvars: usize },
    #[error("degree {degree} exceeds truncation order {order}")]
    DegreeOutOfRange { degree: usize, order: usize },
    #[error("operands differ in shape: (nvars, order) {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("{function} is not analytic at constant term {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("malformed map document: {0}")]
    Format(String),
}
