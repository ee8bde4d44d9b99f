//! Explicit and semi-implicit time stepping of the parabolic equation
//! `e^{h(t)∂ₜφ + F(t,z,φ)}·μ = MA(φ)` with Dirichlet data on the boundary band,
//! plus the α-rescaling and twist changes of variables.

mod problem;
mod run;
mod step;
mod transform;

use thiserror::Error;

use crate::operators::OperatorError;

pub use problem::{
    BoundaryData, BoundaryFn, Density, DensityFn, InitialFn, Nonlinearity, NonlinearityFn,
    NonlinearityForm, ProblemSpec, Twist,
};
pub use run::{run_flow, run_flow_with, DtPolicy, RunOptions, Trajectory};
pub use step::{
    step_explicit, step_semi_implicit, FlowState, FlowStepper, Scheme, StepDiagnostics,
};
pub use transform::{
    alpha_rescale, twist_change_of_variables, AlphaRescale, TimeChange, TwistChange,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("update produced a non-finite value at node {node} (t = {t})")]
    NonFinite { node: usize, t: f64 },
    #[error("semi-implicit node solve could not bracket a root at node {node} (t = {t})")]
    RootBracketFailure { node: usize, t: f64 },
    #[error("F decreases in r between {r_lo} and {r_hi} at t = {t}")]
    NonMonotone { t: f64, r_lo: f64, r_hi: f64 },
    #[error("density is negative or non-finite at node {node} (t = {t}): {value}")]
    InvalidDensity { node: usize, t: f64, value: f64 },
    #[error("initial data is not psh: min line Laplacian {min_line_laplacian:e} below -{tol:e}")]
    NotPsh { min_line_laplacian: f64, tol: f64 },
    #[error("nonlinearity has the wrong form: {0}")]
    FormMismatch(String),
    #[error("twist must be positive, got {value} at t = {t}")]
    NonPositiveTwist { t: f64, value: f64 },
    #[error("step limit {steps} reached")]
    MaxSteps { steps: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
