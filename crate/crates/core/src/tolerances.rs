//! Centralized tolerance budget.
//!
//! Every acceptance check and every default in the solvers refers to one of
//! these names; nothing downstream should carry its own magic threshold.

/// Slack allowed in discrete sub/supersolution residual checks and in the
/// comparison inequality.
pub const CERT_TOL: f64 = 1e-9;

/// `is_psh` tolerance is `PSH_C * h`.
pub const PSH_C: f64 = 4.0;

/// Steady-state threshold on `sup |φ_{k+1} − φ_k| / dt`.
pub const STEADY_TOL: f64 = 1e-8;

/// Default density floor inside both logarithms of the flow update.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Default CFL safety factor.
pub const C_CFL: f64 = 0.2;

/// Exactness of the scheme on quadratics whose eigenframe is in the frame set.
pub const QUADRATIC_EXACT: f64 = 1e-10;

/// Bracket width for scalar node solves in the elliptic solver.
pub const NODE_SOLVE_TOL: f64 = 1e-13;

/// Bracket width for the per-node root of the semi-implicit step.
pub const IMPLICIT_SOLVE_TOL: f64 = 1e-12;

/// Rate-fit window is `[RATE_WINDOW_LOW * steady_tol, RATE_WINDOW_HIGH * d₀]`.
pub const RATE_WINDOW_LOW: f64 = 10.0;
pub const RATE_WINDOW_HIGH: f64 = 0.5;

/// Smallest eigenvalue of the complex Hessian of ρ accepted as "strictly psh".
pub const MIN_RHO_CONVEXITY: f64 = 1e-8;

/// `is_psh` tolerance for a mesh of spacing `h`.
pub fn psh_tol(h: f64) -> f64 {
    PSH_C * h
}

/// Largest Monge-Ampère density accepted as "maximal", and the defect above
/// which a vanishing-density region refutes admissibility.
pub const MAXIMALITY_TOL: f64 = 1e-8;
