//! Viscosity-solution solver and verification harness for degenerate
//! parabolic complex Monge-Ampère flows
//!
//! ```text
//! e^{∂ₜφ + F(t,z,φ)} μ − (dd^c φₜ)ⁿ = 0   in ]0,T[ × Ω
//! φ = φ₀                                 on the parabolic boundary
//! ```
//!
//! on balls and complex ellipsoids in C¹ and C². The spatial operator is a
//! monotone wide-stencil discretization (minimum over integer complex-line
//! frames of weighted line Laplacians, clamped at zero), so the discrete flow
//! inherits a comparison principle. Around it sit the pieces needed to check
//! the qualitative theory numerically: plurisubharmonicity tests and psh
//! envelopes, time sup/inf-convolutions, explicit sub/supersolutions and
//! barriers, an elliptic Dirichlet solver for long-time limits, and drivers
//! that turn all of this into pass/fail reports.
//!
//! Units: Monge-Ampère densities are Hessian determinants, so
//! `ma_density(|z|²) = 1` and `μ` must be given in the same units.

pub mod barriers;
pub mod elliptic;
pub mod exec;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod operators;
pub mod pshtools;
pub mod regularize;
mod roots;
pub mod tolerances;

pub use barriers::{
    check_admissible, global_subsolution, Admissibility, BarrierError, BarrierKind, BarrierSpec,
    Certified, Side, SpaceTimeSamples, TimeGrid,
};
pub use elliptic::{EllipticError, EllipticOptions, EllipticSolution};
pub use exec::Execution;
pub use flow::{
    run_flow, Density, DtPolicy, FlowError, FlowState, Nonlinearity, ProblemSpec, RunOptions,
    Scheme, Trajectory,
};
pub use geometry::{build_mesh, rho_eval, DomainSpec, GeometryError, GridMesh, NodeClass};
pub use operators::{
    ma_density, FrameSet, InteriorField, LineDir, MaOperator, OperatorError, ScalarField,
};
