use super::{FlowError, FlowState, FlowStepper, ProblemSpec, Scheme, StepDiagnostics};
use crate::exec::Execution;
use crate::operators::ScalarField;
use crate::tolerances::{C_CFL, DENSITY_FLOOR, STEADY_TOL};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    /// Constant step; the last step before each snapshot is shortened to land on it.
    Fixed(f64),
    /// `c_cfl` times the stability bound, re-estimated every step.
    Cfl,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub dt: DtPolicy,
    pub c_cfl: f64,
    pub kappa: f64,
    /// Sorted, nonnegative, and within the horizon.
    pub snapshot_times: Vec<f64>,
    /// Stop once `sup-update / dt` falls below this; `None` runs to the last snapshot.
    pub steady_tol: Option<f64>,
    /// Refuse steps larger than `c_cfl` times the stability bound.
    pub enforce_cfl: bool,
    pub max_steps: usize,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Explicit,
            dt: DtPolicy::Cfl,
            c_cfl: C_CFL,
            kappa: DENSITY_FLOOR,
            snapshot_times: Vec::new(),
            steady_tol: Some(STEADY_TOL),
            enforce_cfl: true,
            max_steps: 50_000_000,
            exec: Execution::Auto,
        }
    }
}

impl RunOptions {
    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    /// `count + 1` equispaced snapshot times on `[0, t_end]`.
    pub fn equispaced(mut self, t_end: f64, count: usize) -> Self {
        self.snapshot_times = (0..=count)
            .map(|i| t_end * i as f64 / count as f64)
            .collect();
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ScalarField>,
    /// `true` for snapshots filled with the steady field after early stop.
    pub extrapolated: Vec<bool>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Time at which steady state was detected.
    pub steady_at: Option<f64>,
}

impl Trajectory {
    /// Trajectory with no step history, e.g. for synthetic inputs.
    pub fn from_snapshots(times: Vec<f64>, snapshots: Vec<ScalarField>) -> Self {
        let extrapolated = vec![false; times.len()];
        Self {
            times,
            snapshots,
            extrapolated,
            diagnostics: Vec::new(),
            steady_at: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ScalarField> {
        self.snapshots.last()
    }

    pub fn steps(&self) -> usize {
        self.diagnostics.len()
    }
}

fn check_options(problem: &ProblemSpec, opts: &RunOptions) -> Result<(), FlowError> {
    let bad = |m: String| Err(FlowError::InvalidOptions(m));
    if opts.snapshot_times.is_empty() {
        return bad("no snapshot times".into());
    }
    let mut prev = 0.0;
    for &t in &opts.snapshot_times {
        if !(t >= prev) || !t.is_finite() {
            return bad(format!(
                "snapshot times must be finite, nonnegative and sorted (got {t})"
            ));
        }
        if t > problem.horizon() {
            return bad(format!(
                "snapshot time {t} beyond horizon {}",
                problem.horizon()
            ));
        }
        prev = t;
    }
    if let DtPolicy::Fixed(dt) = opts.dt {
        if !(dt > 0.0) {
            return bad(format!("time step must be positive, got {dt}"));
        }
    }
    if !(opts.c_cfl > 0.0) {
        return bad(format!("c_cfl must be positive, got {}", opts.c_cfl));
    }
    Ok(())
}

/// Time-steps `problem` and records a field at every requested time.
pub fn run_flow(problem: &ProblemSpec, opts: &RunOptions) -> Result<Trajectory, FlowError> {
    run_flow_with(problem, opts, |_, _| Ok(()))
}

/// [`run_flow`] with a callback on every state reached (including `t = 0`).
pub fn run_flow_with<C>(
    problem: &ProblemSpec,
    opts: &RunOptions,
    mut visit: C,
) -> Result<Trajectory, FlowError>
where
    C: FnMut(&FlowState, Option<&StepDiagnostics>) -> Result<(), FlowError>,
{
    check_options(problem, opts)?;
    let mut stepper = FlowStepper::new(problem, opts.scheme, opts.kappa, opts.exec)?;
    let mut state = FlowState::initial(problem)?;
    visit(&state, None)?;
    let guard = if opts.enforce_cfl {
        Some(opts.c_cfl)
    } else {
        None
    };
    let mut bound = match opts.dt {
        DtPolicy::Cfl => stepper.stability_bound(&state)?,
        DtPolicy::Fixed(_) => f64::INFINITY,
    };
    let mut traj = Trajectory {
        times: Vec::with_capacity(opts.snapshot_times.len()),
        snapshots: Vec::with_capacity(opts.snapshot_times.len()),
        extrapolated: Vec::with_capacity(opts.snapshot_times.len()),
        diagnostics: Vec::new(),
        steady_at: None,
    };
    for &target in &opts.snapshot_times {
        while traj.steady_at.is_none() && state.t < target {
            if traj.diagnostics.len() >= opts.max_steps {
                return Err(FlowError::MaxSteps {
                    steps: opts.max_steps,
                });
            }
            let remaining = target - state.t;
            let nominal = match opts.dt {
                DtPolicy::Fixed(dt) => dt,
                DtPolicy::Cfl => opts.c_cfl * bound,
            };
            let landing = nominal * (1.0 + 1e-9) >= remaining;
            let dt = if landing { remaining } else { nominal };
            let diag = match stepper.step(&mut state, dt, guard) {
                Ok(d) => d,
                Err(FlowError::CflViolation { bound: b, .. }) if opts.dt == DtPolicy::Cfl => {
                    // b already includes the safety factor
                    bound = b / opts.c_cfl;
                    let dt = (opts.c_cfl * bound).min(remaining);
                    stepper.step(&mut state, dt, guard)?
                }
                Err(e) => return Err(e),
            };
            bound = diag.stability_bound;
            if target - state.t <= 1e-9 * diag.dt {
                state.t = target;
            }
            let rate = diag.sup_update / diag.dt;
            visit(&state, Some(&diag))?;
            traj.diagnostics.push(diag);
            if let Some(tol) = opts.steady_tol {
                if rate < tol {
                    traj.steady_at = Some(state.t);
                }
            }
        }
        let extrapolated = state.t < target;
        traj.times.push(target);
        traj.snapshots.push(state.field.clone());
        traj.extrapolated.push(extrapolated);
    }
    Ok(traj)
}
