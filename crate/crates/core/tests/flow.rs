use std::sync::Arc;

use cmaflow::flow::{
    alpha_rescale, run_flow, step_explicit, step_semi_implicit, twist_change_of_variables,
    BoundaryData, Density, DtPolicy, FlowError, FlowState, FlowStepper, Nonlinearity, ProblemSpec,
    RunOptions, Scheme, Twist,
};
use cmaflow::{build_mesh, DomainSpec, Execution, MaOperator, ScalarField};
use proptest::prelude::*;

fn op(n: usize, h: f64) -> Arc<MaOperator> {
    let mesh = Arc::new(build_mesh(&DomainSpec::ball(n, 1.0).unwrap(), h, 1).unwrap());
    Arc::new(MaOperator::with_default_frames(mesh).unwrap())
}

fn nsq(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum()
}

const KAPPA: f64 = 1e-12;

fn interior_updates(p: &ProblemSpec, a: &FlowState, b: &FlowState) -> Vec<f64> {
    p.mesh()
        .interior()
        .iter()
        .map(|&i| b.field.value(i) - a.field.value(i))
        .collect()
}

#[test]
fn stationary_quadratic_does_not_move() {
    for n in [1, 2] {
        let p = ProblemSpec::from_fn(
            op(n, 0.25),
            Nonlinearity::zero(),
            Density::constant(1.0),
            nsq,
        )
        .unwrap();
        let s0 = FlowState::initial(&p).unwrap();
        let (s1, d) = step_explicit(&p, &s0, 1e-3, KAPPA).unwrap();
        assert!(d.sup_update <= 1e-13, "n={n} update {}", d.sup_update);
        assert_eq!(d.floor_count, 0);
        assert_eq!(s1.t, 1e-3);
    }
}

#[test]
fn doubled_quadratic_moves_by_log_two() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::zero(),
        Density::constant(1.0),
        |z| 2.0 * nsq(z),
    )
    .unwrap();
    let s0 = FlowState::initial(&p).unwrap();
    let dt = 1e-3;
    let (s1, _) = step_explicit(&p, &s0, dt, KAPPA).unwrap();
    for u in interior_updates(&p, &s0, &s1) {
        assert!((u - dt * 2f64.ln()).abs() < 1e-15);
    }
    let band = p.mesh().boundary();
    assert!(band.iter().all(|&a| s1.field.value(a) == s0.field.value(a)));
}

#[test]
fn vanishing_density_hits_the_floor() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::zero(),
        Density::constant(0.0),
        nsq,
    )
    .unwrap();
    let s0 = FlowState::initial(&p).unwrap();
    let dt = 1e-6;
    let (s1, d) = step_explicit(&p, &s0, dt, KAPPA).unwrap();
    assert_eq!(d.floor_count, p.mesh().interior().len());
    for u in interior_updates(&p, &s0, &s1) {
        assert!((u - dt * (0.0 - KAPPA.ln())).abs() < 1e-12);
    }
}

#[test]
fn semi_implicit_matches_explicit_for_zero_f() {
    let p = ProblemSpec::from_fn(
        op(2, 0.25),
        Nonlinearity::zero(),
        Density::constant(0.7),
        |z| nsq(z) + 0.3 * z[0] * z[0],
    )
    .unwrap();
    let s0 = FlowState::initial(&p).unwrap();
    let (a, _) = step_explicit(&p, &s0, 1e-3, KAPPA).unwrap();
    let (b, _) = step_semi_implicit(&p, &s0, 1e-3, KAPPA).unwrap();
    assert!(a.field.sup_distance(&b.field).unwrap() <= 1e-12);
}

/// `r + dt·r = φ_old + dt·L` has the root `(φ_old + dt·L)/(1 + dt)`.
#[test]
fn semi_implicit_linear_closed_form() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::linear(1.0),
        Density::constant(0.5),
        nsq,
    )
    .unwrap();
    let s0 = FlowState::initial(&p).unwrap();
    let dt = 0.01;
    let (s1, _) = step_semi_implicit(&p, &s0, dt, KAPPA).unwrap();
    let l = (1.0f64 / 0.5).ln();
    for &a in p.mesh().interior() {
        let expect = (s0.field.value(a) + dt * l) / (1.0 + dt);
        assert!((s1.field.value(a) - expect).abs() <= 1e-12);
    }
}

#[test]
fn update_is_first_order_in_dt() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::arctan(),
        Density::constant(2.0),
        |z| nsq(z) + 0.5 * z[0],
    )
    .unwrap();
    let s0 = FlowState::initial(&p).unwrap();
    for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
        let mut ratios = Vec::new();
        for dt in [1e-3, 1e-4, 1e-5] {
            let mut s = s0.clone();
            let mut st = FlowStepper::new(&p, scheme, KAPPA, Execution::Sequential).unwrap();
            let d = st.step(&mut s, dt, None).unwrap();
            ratios.push(d.sup_update / dt);
        }
        assert!((ratios[0] - ratios[2]).abs() < 1e-2 * ratios[2]);
    }
}

#[test]
fn cfl_violation_is_reported_and_state_kept() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::zero(),
        Density::constant(1.0),
        nsq,
    )
    .unwrap();
    let mut s = FlowState::initial(&p).unwrap();
    let mut st = FlowStepper::new(&p, Scheme::Explicit, KAPPA, Execution::Auto).unwrap();
    let bound = st.stability_bound(&s).unwrap();
    // h² / (n·β_max) with MA = 1: β_max = 1/h²
    assert!((bound - 0.125 * 0.125).abs() < 1e-15);
    let before = s.clone();
    let err = st.step(&mut s, bound, Some(0.5)).unwrap_err();
    assert!(matches!(err, FlowError::CflViolation { .. }));
    assert_eq!(s.t, 0.0);
    assert_eq!(s.field.values(), before.field.values());
    st.step(&mut s, 0.5 * bound, Some(0.5)).unwrap();
}

#[test]
fn problem_validation() {
    let o = op(1, 0.125);
    let dec = Nonlinearity::from_fn("decreasing", 1.0, |_, _, r: f64| -r);
    assert!(matches!(
        ProblemSpec::from_fn(Arc::clone(&o), dec, Density::constant(1.0), nsq),
        Err(FlowError::NonMonotone { .. })
    ));
    assert!(matches!(
        ProblemSpec::from_fn(
            Arc::clone(&o),
            Nonlinearity::zero(),
            Density::constant(-1.0),
            nsq
        ),
        Err(FlowError::InvalidDensity { .. })
    ));
    assert!(matches!(
        ProblemSpec::from_fn(
            Arc::clone(&o),
            Nonlinearity::zero(),
            Density::constant(1.0),
            |z| -nsq(z)
        ),
        Err(FlowError::NotPsh { .. })
    ));
}

#[test]
fn steady_state_is_preserved_by_run() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::zero(),
        Density::constant(1.0),
        nsq,
    )
    .unwrap()
    .with_horizon(1.0)
    .unwrap();
    let opts = RunOptions {
        steady_tol: None,
        ..RunOptions::default()
    }
    .equispaced(1.0, 4);
    let tr = run_flow(&p, &opts).unwrap();
    assert_eq!(tr.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    for s in &tr.snapshots {
        assert!(s.sup_distance(p.phi0()).unwrap() <= 1e-10);
    }
    assert!(tr.extrapolated.iter().all(|e| !e));
}

#[test]
fn early_stop_fills_remaining_snapshots() {
    let p = ProblemSpec::from_fn(
        op(1, 0.125),
        Nonlinearity::zero(),
        Density::constant(1.0),
        nsq,
    )
    .unwrap();
    let tr = run_flow(
        &p,
        &RunOptions::default().with_snapshots(vec![0.0, 1.0, 2.0]),
    )
    .unwrap();
    assert!(tr.steady_at.is_some());
    assert_eq!(tr.extrapolated, vec![false, true, true]);
    assert_eq!(tr.steps(), 1);
}

fn manufactured(n: usize, h: f64) -> ProblemSpec {
    let c = n as f64 * 2f64.ln();
    ProblemSpec::from_fn(
        op(n, h),
        Nonlinearity::zero(),
        Density::constant(1.0),
        |z| 2.0 * nsq(z),
    )
    .unwrap()
    .with_horizon(0.5)
    .unwrap()
    .with_boundary(BoundaryData::TimeDependent(Arc::new(move |t, z, _| {
        2.0 * nsq(z) + c * t
    })))
}

#[test]
fn manufactured_solution_is_tracked() {
    for n in [1, 2] {
        let p = manufactured(n, if n == 1 { 1.0 / 16.0 } else { 0.25 });
        let opts = RunOptions {
            dt: DtPolicy::Fixed(1e-3),
            c_cfl: 1.0,
            steady_tol: None,
            ..RunOptions::default()
        }
        .with_snapshots(vec![0.5]);
        let tr = run_flow(&p, &opts).unwrap();
        let c = n as f64 * 2f64.ln();
        let exact = ScalarField::from_fn(p.mesh(), |z| 2.0 * nsq(z) + c * 0.5).unwrap();
        assert!(tr.last().unwrap().sup_distance(&exact).unwrap() < 1e-10);
    }
}

#[test]
fn snapshots_land_exactly() {
    let p = manufactured(1, 0.125);
    let opts = RunOptions {
        dt: DtPolicy::Fixed(0.03),
        c_cfl: 1.0,
        steady_tol: None,
        ..RunOptions::default()
    }
    .with_snapshots(vec![0.1, 0.5]);
    let tr = run_flow(&p, &opts).unwrap();
    let ts: Vec<f64> = tr.diagnostics.iter().map(|d| d.t).collect();
    assert!(ts.iter().any(|&t| (t - 0.1).abs() < 1e-12));
    assert!((ts.last().unwrap() - 0.5).abs() < 1e-12);
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn constant_shift_commutes_with_zero_f() {
    let mu = Density::radial("bump", |r| 1.0 + r * r);
    let base = |z: &[f64]| nsq(z) + 0.2 * z[1];
    let p = ProblemSpec::from_fn(op(1, 0.125), Nonlinearity::zero(), mu.clone(), base)
        .unwrap()
        .with_horizon(0.2)
        .unwrap();
    let q = ProblemSpec::from_fn(op(1, 0.125), Nonlinearity::zero(), mu, move |z| {
        base(z) + 0.75
    })
    .unwrap()
    .with_horizon(0.2)
    .unwrap();
    let opts = RunOptions {
        dt: DtPolicy::Fixed(2e-3),
        steady_tol: None,
        ..RunOptions::default()
    }
    .equispaced(0.2, 2);
    let a = run_flow(&p, &opts).unwrap();
    let b = run_flow(&q, &opts).unwrap();
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        for (u, v) in x.values().iter().zip(y.values()) {
            assert!((v - u - 0.75).abs() < 1e-12);
        }
    }
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let p = ProblemSpec::from_fn(
        op(2, 0.25),
        Nonlinearity::arctan(),
        Density::constant(1.5),
        nsq,
    )
    .unwrap()
    .with_horizon(0.05)
    .unwrap();
    let mk = |exec| {
        RunOptions {
            exec,
            steady_tol: None,
            ..RunOptions::default()
        }
        .with_snapshots(vec![0.05])
    };
    let a = run_flow(&p, &mk(Execution::Sequential)).unwrap();
    let b = run_flow(&p, &mk(Execution::Auto)).unwrap();
    assert_eq!(a.last().unwrap().values(), b.last().unwrap().values());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Ordered data stay ordered under CFL-respecting steps.
    #[test]
    fn discrete_comparison(shift in 0.0f64..0.5, tilt in -0.5f64..0.5, a in 0.5f64..2.0) {
        let o = op(1, 0.125);
        let mu = Density::constant(a);
        let lo = move |z: &[f64]| nsq(z) + tilt * z[0];
        let hi = move |z: &[f64]| lo(z) + shift + 0.1 * (1.0 + z[1]).max(0.0);
        let p = ProblemSpec::from_fn(Arc::clone(&o), Nonlinearity::arctan(), mu.clone(), lo).unwrap().with_horizon(0.1).unwrap();
        let q = ProblemSpec::from_fn(o, Nonlinearity::arctan(), mu, hi).unwrap().with_horizon(0.1).unwrap();
        let opts = RunOptions { steady_tol: None, dt: DtPolicy::Fixed(1e-3), c_cfl: 1.0, ..RunOptions::default() }.equispaced(0.1, 5);
        let u = run_flow(&p, &opts).unwrap();
        let v = run_flow(&q, &opts).unwrap();
        for (x, y) in u.snapshots.iter().zip(&v.snapshots) {
            for (s, t) in x.values().iter().zip(y.values()) {
                prop_assert!(*s <= *t + 1e-9);
            }
        }
    }

    #[test]
    fn alpha_rescale_round_trip(alpha in 0.2f64..3.0, t in 0.0f64..3.0, seed in 0u64..1000) {
        let o = op(1, 0.25);
        let p = ProblemSpec::from_fn(o, Nonlinearity::linear(alpha), Density::constant(1.0), nsq).unwrap();
        let r = alpha_rescale(&p).unwrap();
        let field = ScalarField::from_fn(p.mesh(), |z| (seed as f64 * 0.37 + z[0] * 3.1).sin()).unwrap();
        let s = r.s_of_t(t);
        prop_assert!((r.t_of_s(s) - t).abs() <= 1e-12 * (1.0 + t));
        let back = r.from_rescaled(&r.to_rescaled(&field, t), s);
        prop_assert!(back.sup_distance(&field).unwrap() <= 1e-12);
    }
}

#[test]
fn alpha_rescale_examples() {
    let o = op(2, 0.25);
    let p = ProblemSpec::from_fn(
        Arc::clone(&o),
        Nonlinearity::linear(1.0),
        Density::constant(1.0),
        |z| nsq(z) - 1.0,
    )
    .unwrap();
    let r = alpha_rescale(&p).unwrap();
    assert_eq!(r.t_of_s(0.0), 0.0);
    assert!(r.to_rescaled(p.phi0(), 0.0).sup_distance(p.phi0()).unwrap() == 0.0);
    let z = [0.1, 0.2, 0.0, 0.3];
    assert_eq!(r.problem.density().eval(0.0, &z), 1.0);
    let e = std::f64::consts::E;
    assert!((r.t_of_s(e - 1.0) - 1.0).abs() < 1e-15);
    assert!((r.problem.density().eval(e - 1.0, &z) - e * e).abs() < 1e-13);
    let psi = r.to_rescaled(p.phi0(), 1.0);
    for (a, b) in psi.values().iter().zip(p.phi0().values()) {
        assert!((a - e * b).abs() < 1e-14);
    }
    let q = ProblemSpec::from_fn(o, Nonlinearity::arctan(), Density::constant(1.0), nsq).unwrap();
    assert!(matches!(alpha_rescale(&q), Err(FlowError::FormMismatch(_))));
}

/// The rescaled zero-`F` flow mapped back agrees with the direct flow.
#[test]
fn alpha_rescaled_flow_matches_direct_flow() {
    let o = op(1, 0.125);
    let p = ProblemSpec::from_fn(o, Nonlinearity::linear(1.0), Density::constant(1.0), |z| {
        nsq(z) - 1.0
    })
    .unwrap()
    .with_horizon(0.5)
    .unwrap();
    let r = alpha_rescale(&p).unwrap();
    let opts = |t| {
        RunOptions {
            steady_tol: None,
            dt: DtPolicy::Fixed(1e-4),
            c_cfl: 1.0,
            ..RunOptions::default()
        }
        .with_snapshots(vec![t])
    };
    let direct = run_flow(&p, &opts(0.5)).unwrap();
    let s_end = r.s_of_t(0.5);
    let rescaled = run_flow(&r.problem, &opts(s_end)).unwrap();
    let back = r.from_rescaled(rescaled.last().unwrap(), s_end);
    let d = back.sup_distance(direct.last().unwrap()).unwrap();
    assert!(d < 5e-4, "distance {d}");
}

#[test]
fn twist_examples() {
    let o = op(1, 0.25);
    let base = ProblemSpec::from_fn(o, Nonlinearity::arctan(), Density::constant(1.0), nsq)
        .unwrap()
        .with_horizon(2.0)
        .unwrap();
    let id = twist_change_of_variables(&base, 1e-3).unwrap();
    assert_eq!(id.time.gamma(0.7), 0.7);
    let tc = twist_change_of_variables(
        &base.clone().with_twist(Twist::new("1+t", |t| 1.0 + t)),
        1e-4,
    )
    .unwrap();
    for t in [0.0, 0.3, 1.0, 2.0] {
        assert!((tc.time.g(t) - (1.0f64 + t).ln()).abs() <= 1e-8);
    }
    for s in [0.0, 0.2, 1.0] {
        assert!((tc.time.gamma(s) - s.exp_m1()).abs() <= 1e-8);
    }
    let two =
        twist_change_of_variables(&base.clone().with_twist(Twist::constant(2.0)), 1e-2).unwrap();
    assert!((two.time.gamma(0.4) - 0.8).abs() < 1e-12);
    assert!((two.problem.horizon() - 1.0).abs() < 1e-12);
    let bad = base.with_twist(Twist::new("sign change", |t| 1.0 - t));
    assert!(matches!(
        twist_change_of_variables(&bad, 1e-2),
        Err(FlowError::NonPositiveTwist { .. })
    ));
}

/// Twisted flow at `t` agrees with the untwisted flow at `g(t)`.
#[test]
fn twisted_flow_matches_time_changed_flow() {
    let o = op(1, 0.125);
    let f = Nonlinearity::from_fn("t-dependent", 1.0, |t, _, r: f64| r.atan() + 0.5 * t);
    let twisted = ProblemSpec::from_fn(o, f, Density::constant(1.0), |z| nsq(z) - 1.0)
        .unwrap()
        .with_horizon(1.0)
        .unwrap()
        .with_twist(Twist::new("1+t", |t| 1.0 + t));
    let tc = twist_change_of_variables(&twisted, 1e-4).unwrap();
    let opts = |t| {
        RunOptions {
            steady_tol: None,
            dt: DtPolicy::Fixed(1e-4),
            c_cfl: 1.0,
            ..RunOptions::default()
        }
        .with_snapshots(vec![t])
    };
    let a = run_flow(&twisted, &opts(1.0)).unwrap();
    let s_end = tc.time.g(1.0);
    let b = run_flow(&tc.problem, &opts(s_end)).unwrap();
    let d = a.last().unwrap().sup_distance(b.last().unwrap()).unwrap();
    assert!(d < 1e-3, "distance {d}");
}
