//! Drivers that turn the solver pieces into pass/fail reports: the discrete
//! comparison inequality, Perron lower envelopes, spatial plurisubharmonicity
//! of trajectories, seeded randomized suites, run configuration, and report
//! files.

mod checks;
mod config;
mod report;
mod suites;

use std::path::PathBuf;

use thiserror::Error;

use crate::barriers::BarrierError;
use crate::elliptic::EllipticError;
use crate::flow::FlowError;
use crate::geometry::GeometryError;
use crate::operators::OperatorError;
use crate::pshtools::PshError;
use crate::regularize::RegularizeError;

pub use checks::{
    comparison_check, perron_lower_envelope_check, theorem_a_check, ComparisonReport, PerronReport,
    PshTrajectoryReport,
};
pub use config::{Config, Tolerances, PRESETS};
pub use report::{report_emit, RunArtifacts};
pub use suites::{
    comparison_suite, convergence_suite, envelope_tester_suite, maximality_suite, psh_suite,
    random_certified_pair, regularize_suite, verify_all, CertifiedPair, CheckOutcome,
    ConvergenceSettings, SuiteReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("inputs live on different meshes")]
    MeshMismatch,
    #[error("inputs are sampled at different times")]
    TimeMismatch,
    #[error("{0}")]
    Uncertified(String),
    #[error("no common sample times between the family and the flow")]
    NoCommonTimes,
    #[error("cannot access {}: {source}", .path.display())]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Psh(#[from] PshError),
    #[error(transparent)]
    Regularize(#[from] RegularizeError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
