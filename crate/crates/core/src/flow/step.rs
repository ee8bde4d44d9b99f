use super::{FlowError, ProblemSpec};
use crate::exec::{self, Execution};
use crate::operators::{clamp_pow, MaOperator, ScalarField};
use crate::roots::increasing_root;
use crate::tolerances::IMPLICIT_SOLVE_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Explicit,
    /// Implicit in the zeroth-order term `F`, explicit in the Monge-Ampère term.
    SemiImplicit,
}

/// Time and field of a running flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub field: ScalarField,
}

impl FlowState {
    /// `φ₀` at `t = 0`, with the boundary band set to the lateral data at 0.
    pub fn initial(problem: &ProblemSpec) -> Result<Self, FlowError> {
        let field = problem
            .phi0()
            .clone()
            .with_boundary(&problem.band_values(0.0))?;
        Ok(Self { t: 0.0, field })
    }
}

/// Per-step record. Node statistics refer to the state before the step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    /// Time after the step.
    pub t: f64,
    pub dt: f64,
    /// `sup |φ_new − φ_old|` over interior nodes.
    pub sup_update: f64,
    /// Interior nodes where `MA < κ` or `μ < κ`.
    pub floor_count: usize,
    pub min_line_laplacian: f64,
    /// Monotonicity bound on `dt` at this step, before the safety factor.
    pub stability_bound: f64,
}

#[derive(Clone, Copy, Default)]
struct NodeOut {
    value: f64,
    /// `max(MA, κ)^{1/n}`.
    m: f64,
    min_ll: f64,
    floored: bool,
}

/// Advances a [`ProblemSpec`] with one scheme and density floor.
///
/// The stability bound is the largest `dt` for which the update is
/// nondecreasing in every stencil value:
/// `dt ≤ h(t) / (n·β_max / min max(MA, κ)^{1/n} + L)`, with `L = sup|∂ᵣF|`
/// for the explicit scheme and `L = 0` for the semi-implicit one.
pub struct FlowStepper<'a> {
    problem: &'a ProblemSpec,
    scheme: Scheme,
    kappa: f64,
    exec: Execution,
    log_mu: Vec<f64>,
    mu_floored: Vec<bool>,
    mu_time: Option<f64>,
    out: Vec<NodeOut>,
}

impl<'a> FlowStepper<'a> {
    pub fn new(
        problem: &'a ProblemSpec,
        scheme: Scheme,
        kappa: f64,
        exec: Execution,
    ) -> Result<Self, FlowError> {
        if !(kappa > 0.0) {
            return Err(FlowError::InvalidOptions(format!(
                "density floor must be positive, got {kappa}"
            )));
        }
        let ni = problem.mesh().interior().len();
        Ok(Self {
            problem,
            scheme,
            kappa,
            exec,
            log_mu: vec![0.0; ni],
            mu_floored: vec![false; ni],
            mu_time: None,
            out: vec![NodeOut::default(); ni],
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn refresh_density(&mut self, t: f64) {
        let fresh = match self.mu_time {
            None => true,
            Some(prev) => prev != t && !self.problem.density().is_time_independent(),
        };
        if !fresh {
            return;
        }
        let mu = self.problem.density();
        let mesh = self.problem.mesh();
        let kappa = self.kappa;
        let interior = mesh.interior();
        let pairs: Vec<(f64, bool)> = exec::map(self.exec, interior.len(), |k| {
            let v = mu.eval(t, mesh.coords(interior[k]));
            (v.max(kappa).ln(), v < kappa)
        });
        for (k, (l, f)) in pairs.into_iter().enumerate() {
            self.log_mu[k] = l;
            self.mu_floored[k] = f;
        }
        self.mu_time = Some(t);
    }

    fn twist_at(&self, t: f64) -> Result<f64, FlowError> {
        match self.problem.twist() {
            None => Ok(1.0),
            Some(tw) => {
                let v = tw.eval(t);
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(FlowError::NonPositiveTwist { t, value: v })
                }
            }
        }
    }

    fn bound_from(&self, m_min: f64, twist: f64) -> f64 {
        let op: &MaOperator = self.problem.op();
        let n = op.mesh().n() as f64;
        let l = match self.scheme {
            Scheme::Explicit => self.problem.nonlinearity().lipschitz_r(),
            Scheme::SemiImplicit => 0.0,
        };
        twist / (n * op.max_beta() / m_min + l)
    }

    /// Monotonicity bound on `dt` for the given state.
    pub fn stability_bound(&mut self, state: &FlowState) -> Result<f64, FlowError> {
        let op = self.problem.op();
        let n = op.mesh().n();
        let kappa = self.kappa;
        let v = state.field.values();
        let ni = op.mesh().interior().len();
        let mut ms = vec![0.0; ni];
        exec::fill_with(
            self.exec,
            &mut ms,
            || op.scratch(),
            |s, k| root_n(clamp_pow(op.frame_min_at(v, k, s), n).max(kappa), n),
        );
        let m_min = ms.iter().copied().fold(f64::INFINITY, f64::min);
        let twist = self.twist_at(state.t)?;
        Ok(self.bound_from(m_min, twist))
    }

    /// One step of size `dt`. When `max_dt_factor` is `Some(c)` the step is
    /// refused with `CflViolation` if `dt > c·bound`; the state is unchanged
    /// on any error.
    pub fn step(
        &mut self,
        state: &mut FlowState,
        dt: f64,
        max_dt_factor: Option<f64>,
    ) -> Result<StepDiagnostics, FlowError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(FlowError::InvalidOptions(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let t = state.t;
        self.refresh_density(t);
        let twist = self.twist_at(t)?;
        let problem = self.problem;
        let op = problem.op();
        let mesh = op.mesh();
        let interior = mesh.interior();
        let n = mesh.n();
        let kappa = self.kappa;
        let f = problem.nonlinearity();
        let vals = state.field.values();
        let log_mu = &self.log_mu;
        let mu_floored = &self.mu_floored;
        let c = dt / twist;
        let scheme = self.scheme;
        exec::fill_with(
            self.exec,
            &mut self.out,
            || op.scratch(),
            |sums, k| {
                let a = interior[k];
                let z = mesh.coords(a);
                let phi = vals[a];
                let (m, min_ll) = op.frame_min_and_min_line(vals, k, sums);
                let ma = clamp_pow(m, n);
                let floored = ma < kappa || mu_floored[k];
                let ma = ma.max(kappa);
                let drive = ma.ln() - log_mu[k];
                let value = match scheme {
                    Scheme::Explicit => phi + c * (drive - f.eval(t, z, phi)),
                    Scheme::SemiImplicit => {
                        let b = phi + c * drive;
                        let g = |r: f64| r + c * f.eval(t + dt, z, r) - b;
                        // g has slope ≥ 1, so the root is within |g(guess)| of the guess.
                        let g0 = g(b);
                        let w = g0.abs().max(IMPLICIT_SOLVE_TOL);
                        increasing_root(g, b - w, b + w, IMPLICIT_SOLVE_TOL, 8).unwrap_or(f64::NAN)
                    }
                };
                NodeOut {
                    value,
                    m: root_n(ma, n),
                    min_ll,
                    floored,
                }
            },
        );
        let mut m_min = f64::INFINITY;
        let mut min_ll = f64::INFINITY;
        let mut floor_count = 0;
        let mut sup_update: f64 = 0.0;
        for (k, o) in self.out.iter().enumerate() {
            if !o.value.is_finite() {
                let node = interior[k];
                return Err(match scheme {
                    Scheme::SemiImplicit if vals[node].is_finite() => {
                        FlowError::RootBracketFailure { node, t }
                    }
                    _ => FlowError::NonFinite { node, t },
                });
            }
            m_min = m_min.min(o.m);
            min_ll = min_ll.min(o.min_ll);
            floor_count += o.floored as usize;
            sup_update = sup_update.max((o.value - vals[interior[k]]).abs());
        }
        let bound = self.bound_from(m_min, twist);
        if let Some(fac) = max_dt_factor {
            if dt > fac * bound * (1.0 + 1e-12) {
                return Err(FlowError::CflViolation {
                    dt,
                    bound: fac * bound,
                });
            }
        }
        let t_new = t + dt;
        let band = match problem.boundary() {
            super::BoundaryData::Fixed => None,
            super::BoundaryData::TimeDependent(_) => Some(problem.band_values(t_new)),
        };
        let values = state.field.values_mut();
        for (k, o) in self.out.iter().enumerate() {
            values[interior[k]] = o.value;
        }
        if let Some(band) = band {
            for (&a, v) in mesh.boundary().iter().zip(band) {
                if !v.is_finite() {
                    return Err(FlowError::NonFinite { node: a, t: t_new });
                }
                values[a] = v;
            }
        }
        state.t = t_new;
        Ok(StepDiagnostics {
            t: t_new,
            dt,
            sup_update,
            floor_count,
            min_line_laplacian: min_ll,
            stability_bound: bound,
        })
    }
}

#[inline]
fn root_n(x: f64, n: usize) -> f64 {
    if n == 1 {
        x
    } else {
        x.sqrt()
    }
}

/// One explicit step without a stability check.
pub fn step_explicit(
    problem: &ProblemSpec,
    state: &FlowState,
    dt: f64,
    kappa: f64,
) -> Result<(FlowState, StepDiagnostics), FlowError> {
    let mut next = state.clone();
    let mut stepper = FlowStepper::new(problem, Scheme::Explicit, kappa, Execution::Auto)?;
    let d = stepper.step(&mut next, dt, None)?;
    Ok((next, d))
}

/// One semi-implicit step without a stability check.
pub fn step_semi_implicit(
    problem: &ProblemSpec,
    state: &FlowState,
    dt: f64,
    kappa: f64,
) -> Result<(FlowState, StepDiagnostics), FlowError> {
    let mut next = state.clone();
    let mut stepper = FlowStepper::new(problem, Scheme::SemiImplicit, kappa, Execution::Auto)?;
    let d = stepper.step(&mut next, dt, None)?;
    Ok((next, d))
}
