//! Monotone wide-stencil discretization of the complex Monge-Ampère density.
//!
//! For a hermitian `H ≥ 0`, `det(H)^{1/n} = inf { tr(AH)/n : A ≥ 0, det A = 1 }`.
//! The scheme replaces the infimum by a minimum over a finite [`FrameSet`]:
//! each frame is an orthogonal family of integer complex directions with
//! positive weights of product one, and `tr(AH)` becomes a weighted sum of
//! discrete complex-line Laplacians. The result is clamped at zero before the
//! n-th power, so non-psh inputs produce density zero instead of an error.

mod consistency;
mod field;
mod frames;
mod oracle;
mod stencil;

use thiserror::Error;

pub use consistency::{consistency_report, ConsistencyError, ConsistencyRow};
pub(crate) use field::{write_header as field_csv_header, write_row as field_csv_row};
pub use field::{InteriorField, ScalarField};
pub use frames::{Frame, FrameSet, LineDir};
pub use oracle::{
    complex_hessian_fd, hessian_density_exact, ComplexHessian, ExpNormSquared, FnSmooth,
    HermitianQuadratic, NormFourth, NormSquared, SmoothFunction,
};
pub(crate) use stencil::clamp_pow;
pub use stencil::{line_laplacian, ma_density, MaOperator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("stencil of interior node {node} along line {line} leaves the valued nodes")]
    StencilOutOfRange { node: usize, line: usize },
    #[error("non-finite value {value} at active node {node}")]
    NonFinite { node: usize, value: f64 },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("frame set is for n = {frames}, mesh is for n = {mesh}")]
    DimensionMismatch { frames: usize, mesh: usize },
    #[error("node {0} is not an interior node")]
    NotInterior(usize),
    #[error("malformed field csv: {0}")]
    Csv(String),
}
