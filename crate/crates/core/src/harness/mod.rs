//! Monte Carlo baselines, moment-vs-sample comparison studies and the
//! configuration layer behind the command-line tool.

mod config;
mod mc;
mod meshfit;
mod problem;
mod study;

pub use config::{
    BoxVar, Config, EventConfig, FilterConfig, PolicyConfig, RequirementConfig, RunConfig,
};
pub use mc::{
    empirical_moments, frobenius_rel_error, mc_to_event, sample_box, McResult, McSample,
    SampleStatus, StatusCounts,
};
pub use meshfit::{mesh_event_samples, sphere_event_samples};
pub use problem::{Filter, Problem, TRIGGER_TIME};
pub use study::{order_sweep_study, StudyRow, SweepStudy};

use thiserror::Error;

use crate::dynamics::DynError;
use crate::eventmap::{EventError, MeshError};
use crate::jetflow::JetError;
use crate::netpoly::NetError;
use crate::polyalg::PolyError;
use crate::uncert::UncertError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("nominal trajectory does not reach the event: {0}")]
    NominalMiss(String),
    #[error("{hits} event hits, at least {required} needed")]
    InsufficientSamples { hits: usize, required: usize },
    #[error("reference matrix has zero Frobenius norm")]
    ZeroReference,
    #[error("matrix shapes differ: {0}×{1} vs {2}×{3}")]
    Shape(usize, usize, usize, usize),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Event(EventError),
    #[error(transparent)]
    Uncert(#[from] UncertError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl From<EventError> for HarnessError {
    fn from(e: EventError) -> Self {
        match e {
            EventError::Jet(j) => HarnessError::Jet(*j),
            EventError::Mesh(m) => HarnessError::Mesh(m),
            other => HarnessError::Event(other),
        }
    }
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 4 when the nominal trajectory misses the event.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Io { .. }
            | HarnessError::Net(_)
            | HarnessError::Mesh(_)
            | HarnessError::Dyn(_) => 2,
            HarnessError::NominalMiss(_) => 4,
            HarnessError::Jet(JetError::InvalidTolerance(_) | JetError::InvalidRequest(_)) => 2,
            HarnessError::Event(
                EventError::Dimension { .. }
                | EventError::NeuralOutputs(_)
                | EventError::NeuralInputs { .. }
                | EventError::InsufficientSamples { .. },
            ) => 2,
            HarnessError::Uncert(
                UncertError::Bounds { .. }
                | UncertError::LabelMismatch { .. }
                | UncertError::Dimension { .. }
                | UncertError::Component(_)
                | UncertError::EmptyCheck
                | UncertError::SweepOrder { .. }
                | UncertError::MomentOrder(_),
            ) => 2,
            _ => 3,
        }
    }
}
