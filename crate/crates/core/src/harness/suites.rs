use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checks::{comparison_check, theorem_a_check};
use super::config::Tolerances;
use super::HarnessError;
use crate::barriers::{
    certify, eps_subbarrier, eps_superbarrier, global_subsolution, global_supersolution,
    BarrierError, Certified, ParabolicPoint, Side, SpaceTimeSamples, TimeGrid,
};
use crate::elliptic::{
    convergence_report_with, convergence_table_with, solve_dirichlet, solve_steady, EllipticOptions,
};
use crate::exec::Execution;
use crate::flow::{
    run_flow, Density, Nonlinearity, NonlinearityForm, ProblemSpec, RunOptions, Trajectory,
};
use crate::geometry::{build_mesh, DomainSpec};
use crate::operators::{MaOperator, ScalarField};
use crate::pshtools::{is_psh_with, maximality_defect_with, psh_envelope_with};
use crate::regularize::{
    inf_convolution_time, sup_convolution_time, TimeConvolution, TimeSampledFunction,
};
use crate::tolerances::{CERT_TOL, MAXIMALITY_TOL};

/// One pass/fail line.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckOutcome::new(name, pass, detail));
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let passed = self.checks.iter().filter(|c| c.pass).count();
        writeln!(f, "[{}] {passed}/{} passed", self.name, self.checks.len())?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

fn ball_operator(n: usize, h: f64) -> Result<Arc<MaOperator>, HarnessError> {
    let mesh = Arc::new(build_mesh(&DomainSpec::ball(n, 1.0)?, h, 1)?);
    Ok(Arc::new(MaOperator::with_default_frames(mesh)?))
}

/// A randomized problem with a certified subsolution and supersolution.
#[derive(Clone, Debug)]
pub struct CertifiedPair {
    pub problem: ProblemSpec,
    pub u: Certified,
    pub v: Certified,
    /// Bump amplitude that survived certification (0 when every retry failed).
    pub amplitude: f64,
}

fn band_bump(
    problem: &ProblemSpec,
    center: &[f64],
    radius: f64,
    amplitude: f64,
) -> Vec<(usize, f64)> {
    let mesh = problem.mesh();
    mesh.boundary()
        .iter()
        .map(|&a| {
            let d2: f64 = mesh
                .coords(a)
                .iter()
                .zip(center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            (
                a,
                amplitude * (1.0 - d2 / (radius * radius)).max(0.0).powi(3),
            )
        })
        .collect()
}

fn bumped(
    samples: &SpaceTimeSamples,
    bump: &[(usize, f64)],
    sign: f64,
) -> Result<SpaceTimeSamples, HarnessError> {
    let fields = samples
        .fields
        .iter()
        .map(|f| {
            let mut v = f.values().to_vec();
            for &(a, b) in bump {
                v[a] += sign * b;
            }
            ScalarField::from_values(f.mesh(), v)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpaceTimeSamples::new(samples.times.clone(), fields)?)
}

/// Draws `φ₀ = a|z|² + b·Re z₁ + c`, a constant `μ`, `F ∈ {0, r, arctan}` and
/// `ε₁, ε₂`, then certifies `ε₁`-subbarrier minus a band bump and
/// `ε₂`-superbarrier plus the same bump. The amplitude is halved until both
/// certify; after eight halvings the bump is dropped.
pub fn random_certified_pair(
    rng: &mut ChaCha8Rng,
    op: &Arc<MaOperator>,
    grid: TimeGrid,
) -> Result<CertifiedPair, HarnessError> {
    let mesh = op.mesh();
    let (a, b, c) = (
        rng.gen_range(0.0..2.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let f = match rng.gen_range(0..3) {
        0 => Nonlinearity::zero(),
        1 => Nonlinearity::linear(rng.gen_range(0.5..2.0)),
        _ => Nonlinearity::arctan(),
    };
    let mu = Density::constant(rng.gen_range(0.5..2.0));
    let problem = ProblemSpec::from_fn(Arc::clone(op), f, mu, move |z: &[f64]| {
        a * z.iter().map(|x| x * x).sum::<f64>() + b * z[0] + c
    })?;
    let (eps1, eps2) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
    let node = rng.gen_range(0..mesh.active_len());
    let sub = eps_subbarrier(&problem, eps1, ParabolicPoint::Initial { node }, grid)?;
    let sup = eps_superbarrier(&problem, eps2, grid)?;

    let d = mesh.real_dim();
    let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let radius = rng.gen_range(0.2..0.8);
    let mut amplitude = rng.gen_range(0.01..0.5);
    let (base_u, base_v) = (sub.samples(), sup.samples());
    for _ in 0..8 {
        let bump = band_bump(&problem, &center, radius, amplitude);
        let u = certify(
            &problem,
            bumped(&base_u, &bump, -1.0)?,
            Side::Sub,
            "eps-sub minus bump",
        );
        let v = certify(
            &problem,
            bumped(&base_v, &bump, 1.0)?,
            Side::Super,
            "eps-super plus bump",
        );
        match (u, v) {
            (Ok(u), Ok(v)) => {
                return Ok(CertifiedPair {
                    problem,
                    u,
                    v,
                    amplitude,
                })
            }
            (Err(BarrierError::CertificationFailure { .. }), _)
            | (_, Err(BarrierError::CertificationFailure { .. })) => amplitude *= 0.5,
            (Err(e), _) | (_, Err(e)) => return Err(e.into()),
        }
    }
    Ok(CertifiedPair {
        problem,
        u: sub.certified(),
        v: sup.certified(),
        amplitude: 0.0,
    })
}

/// Discrete comparison on `cases` random certified pairs (ball, `n = 1`,
/// `h = 1/16`, `T = 1` in 20 steps), case `i` seeded with `seed + i`.
pub fn comparison_suite(seed: u64, cases: usize, tol: f64) -> Result<SuiteReport, HarnessError> {
    let op = ball_operator(1, 1.0 / 16.0)?;
    let grid = TimeGrid::new(1.0, 20)?;
    let mut report = SuiteReport::new("comparison");

    let fixed = ProblemSpec::from_fn(
        Arc::clone(&op),
        Nonlinearity::linear(1.0),
        Density::constant(1.0),
        |z: &[f64]| z.iter().map(|x| x * x).sum::<f64>() - 1.0,
    )?;
    let u = global_subsolution(&fixed, grid)?.certified();
    let v = global_supersolution(&fixed, grid)?.certified();
    let r = comparison_check(&u, &v, tol)?;
    report.push(
        "global-sub vs global-super",
        r.pass,
        format!("lhs={:.3e} rhs={:.3e}", r.lhs, r.rhs),
    );

    let mut worst = f64::NEG_INFINITY;
    let (mut failed, mut bumped) = (Vec::new(), 0);
    for i in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let pair = random_certified_pair(&mut rng, &op, grid)?;
        if pair.amplitude > 0.0 {
            bumped += 1;
        }
        let r = comparison_check(&pair.u, &pair.v, tol)?;
        worst = worst.max(r.lhs - r.rhs);
        if !r.pass {
            failed.push(i);
        }
    }
    let mut detail = format!(
        "{cases} pairs, {bumped} with a nonzero bump, max(lhs-rhs)={worst:.3e}, tol={tol:.0e}"
    );
    if !failed.is_empty() {
        let _ = write!(detail, ", failing cases {failed:?}");
    }
    report.push("randomized certified pairs", failed.is_empty(), detail);
    Ok(report)
}

/// `is_psh` with tolerance `psh_c·h` along three flows on the unit disc
/// (steady `|z|²`, `F = r`, `F = arctan r`), followed by [`maximality_suite`].
pub fn psh_suite(seed: u64, h: f64, tolerances: &Tolerances) -> Result<SuiteReport, HarnessError> {
    let op = ball_operator(1, h)?;
    let tol = tolerances.psh_tol(h);
    let mut report = SuiteReport::new("psh");
    let r2 = |z: &[f64]| z.iter().map(|x| x * x).sum::<f64>();
    let runs: [(&str, Nonlinearity, f64, f64); 3] = [
        ("steady |z|^2", Nonlinearity::zero(), 0.0, 1.0),
        ("F = r", Nonlinearity::linear(1.0), -1.0, 2.0),
        ("F = arctan r", Nonlinearity::arctan(), -1.0, 2.0),
    ];
    for (name, f, shift, horizon) in runs {
        let problem = ProblemSpec::from_fn(
            Arc::clone(&op),
            f,
            Density::constant(1.0),
            move |z: &[f64]| r2(z) + shift,
        )?
        .with_horizon(horizon)?;
        let opts = RunOptions {
            steady_tol: None,
            ..RunOptions::default()
        }
        .equispaced(horizon, 8);
        let traj = run_flow(&problem, &opts)?;
        let r = theorem_a_check(&traj, op.frames(), tol)?;
        let min = r
            .min_line_laplacian
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let mut detail = format!(
            "{} snapshots, min line Laplacian {min:.3e}, tol {tol:.3e}",
            traj.len()
        );
        if let Some((t, node)) = r.first_failure {
            let _ = write!(detail, ", first failure t={t} node={node}");
        }
        report.push(format!("snapshots psh: {name}"), r.pass, detail);
    }
    report.checks.extend(maximality_suite(seed, 50)?.checks);
    Ok(report)
}

/// Zero-density Dirichlet solves have vanishing Monge-Ampère density, and the
/// psh envelope passes the tester check.
pub fn maximality_suite(seed: u64, testers: usize) -> Result<SuiteReport, HarnessError> {
    let mut report = SuiteReport::new("maximality");
    let cases: [(usize, f64, &str); 3] = [
        (1, 1.0 / 16.0, "|z|^2"),
        (1, 1.0 / 16.0, "x^3"),
        (2, 1.0 / 8.0, "|z|^2"),
    ];
    for (n, h, g) in cases {
        let op = ball_operator(n, h)?;
        let mesh = op.mesh();
        let data = |z: &[f64]| match g {
            "x^3" => z[0].powi(3),
            _ => z.iter().map(|x| x * x).sum(),
        };
        let boundary: Vec<f64> = mesh
            .boundary()
            .iter()
            .map(|&a| data(mesh.coords(a)))
            .collect();
        let opts = EllipticOptions {
            omega: EllipticOptions::auto_omega(mesh),
            ..EllipticOptions::default()
        };
        let sol = solve_dirichlet(
            &op,
            &Nonlinearity::zero(),
            &Density::constant(0.0),
            &boundary,
            &opts,
        )?;
        let defect = maximality_defect_with(&op, &sol.field, None, Execution::Auto)?;
        report.push(
            format!("mu = 0 solve, n={n}, h={h}, boundary {g}"),
            defect <= MAXIMALITY_TOL,
            format!(
                "defect {defect:.3e} (tol {MAXIMALITY_TOL:.0e}), {} sweeps",
                sol.sweeps
            ),
        );
    }
    report
        .checks
        .extend(envelope_tester_suite(seed, testers)?.checks);
    Ok(report)
}

/// Envelope of a paraboloid with Gaussian peaks on the `n = 1`, `11 × 11` lattice
/// (`h = 0.28`) against `testers` seeded convex testers pushed under the
/// obstacle: every tester stays below the envelope, and the envelope has zero
/// density off its contact set.
pub fn envelope_tester_suite(seed: u64, testers: usize) -> Result<SuiteReport, HarnessError> {
    let mut report = SuiteReport::new("envelope");
    let op = ball_operator(1, 0.28)?;
    let mesh = op.mesh();
    if mesh.side() != 11 {
        return Err(HarnessError::Config {
            line: 0,
            msg: format!("envelope lattice side is {}, expected 11", mesh.side()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peaks: Vec<(f64, f64, [f64; 2])> = (0..3)
        .map(|_| {
            let (r, th) = (
                rng.gen_range(0.0..0.6),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            (
                rng.gen_range(0.2..0.6),
                rng.gen_range(0.15..0.3),
                [r * th.cos(), r * th.sin()],
            )
        })
        .collect();
    let obstacle = ScalarField::from_fn(mesh, |z| {
        let mut v = z[0] * z[0] + z[1] * z[1];
        for (height, s, c) in &peaks {
            let d2 = (z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2);
            v += height * (-d2 / (2.0 * s * s)).exp();
        }
        v
    })?;
    let env = psh_envelope_with(&op, &obstacle, 1e-12, 1_000_000)?;

    let psh = is_psh_with(&op, &env, CERT_TOL, Execution::Sequential)?;
    let below = env
        .values()
        .iter()
        .zip(obstacle.values())
        .all(|(u, o)| u <= o);
    report.push(
        "envelope is psh and below the obstacle",
        psh.pass && below,
        format!("min line Laplacian {:.3e}", psh.min_line_laplacian),
    );

    let mask: Vec<bool> = mesh
        .interior()
        .iter()
        .map(|&a| env.value(a) < obstacle.value(a) - CERT_TOL)
        .collect();
    let free = mask.iter().filter(|m| **m).count();
    let defect = maximality_defect_with(&op, &env, Some(&mask), Execution::Sequential)?;
    report.push(
        "envelope maximal off contact",
        defect <= MAXIMALITY_TOL,
        format!("{free} free nodes, defect {defect:.3e}"),
    );

    let mut worst = f64::NEG_INFINITY;
    let mut touching = 0;
    for _ in 0..testers {
        let pieces: Vec<(f64, [f64; 2], [f64; 2], f64)> = (0..rng.gen_range(1..=3))
            .map(|_| {
                (
                    rng.gen_range(0.0..2.0),
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let w = ScalarField::from_fn(mesh, |z| {
            pieces
                .iter()
                .map(|(al, q, l, c)| {
                    al * ((z[0] - q[0]).powi(2) + (z[1] - q[1]).powi(2))
                        + l[0] * z[0]
                        + l[1] * z[1]
                        + c
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })?;
        let lift = w
            .values()
            .iter()
            .zip(obstacle.values())
            .map(|(w, o)| w - o)
            .fold(f64::NEG_INFINITY, f64::max);
        let w = w.map(|x| x - lift);
        let excess = w
            .values()
            .iter()
            .zip(env.values())
            .map(|(w, u)| w - u)
            .fold(f64::NEG_INFINITY, f64::max);
        if excess > -1e-9 {
            touching += 1;
        }
        worst = worst.max(excess);
    }
    report.push(
        "testers below envelope",
        worst <= CERT_TOL,
        format!("{testers} testers, {touching} touching, max(w - envelope)={worst:.3e}"),
    );
    Ok(report)
}

fn brute_force(signal: &[f64], dt: f64, k: f64, sup: bool) -> (Vec<f64>, Vec<u32>) {
    let step = k * dt;
    let m = signal.len();
    let mut vals = Vec::with_capacity(m);
    let mut arg = Vec::with_capacity(m);
    for i in 0..m {
        let mut best = (
            if sup {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            },
            0u32,
        );
        for (j, &s) in signal.iter().enumerate() {
            let gap = step * i.abs_diff(j) as f64;
            let cand = if sup { s - gap } else { s + gap };
            if (sup && cand > best.0) || (!sup && cand < best.0) {
                best = (cand, j as u32);
            }
        }
        vals.push(best.0);
        arg.push(best.1);
    }
    (vals, arg)
}

/// Checks one convolution against the brute-force oracle and the sandwich,
/// Lipschitz and attainment properties; returns the first violation.
fn check_convolution(signal: &[f64], dt: f64, conv: &TimeConvolution, sup: bool) -> Option<String> {
    let m = signal.len();
    let vals: Vec<f64> = (0..m).map(|i| conv.result.value(i, 0)).collect();
    let arg: Vec<u32> = (0..m).map(|i| conv.attained[i][0]).collect();
    let (ov, oa) = brute_force(signal, dt, conv.k, sup);
    if vals
        .iter()
        .zip(&ov)
        .any(|(a, b)| a.to_bits() != b.to_bits())
        || arg != oa
    {
        return Some("differs from brute force".into());
    }
    let sign = if sup { 1.0 } else { -1.0 };
    if let Some(i) = (0..m).find(|&i| sign * (vals[i] - signal[i]) < 0.0) {
        return Some(format!("sandwich violated at i={i}"));
    }
    let step = conv.k * dt;
    let scale = signal.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let slack = 8.0 * f64::EPSILON * (scale + step * m as f64);
    if let Some(i) = (1..m).find(|&i| (vals[i] - vals[i - 1]).abs() > step + slack) {
        return Some(format!("Lipschitz bound violated at i={i}"));
    }
    let osc = signal.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - signal.iter().copied().fold(f64::INFINITY, f64::min);
    for i in 0..m {
        let j = arg[i] as usize;
        let gap = step * i.abs_diff(j) as f64;
        let attained = if sup {
            signal[j] - gap
        } else {
            signal[j] + gap
        };
        if attained.to_bits() != vals[i].to_bits() {
            return Some(format!("maximizer at i={i} does not attain"));
        }
        if gap > osc + slack || gap > conv.result.oscillation_bound() {
            return Some(format!(
                "maximizer at i={i} too far: {gap:.3e} > osc {osc:.3e}"
            ));
        }
    }
    None
}

/// Seeded piecewise-linear signals through the time sup/inf convolutions.
pub fn regularize_suite(seed: u64, cases: usize) -> Result<SuiteReport, HarnessError> {
    let mut report = SuiteReport::new("regularize");
    let mut failures = Vec::new();
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(case as u64));
        let knots: Vec<f64> = (0..rng.gen_range(2..=8))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let m = rng.gen_range(20..=80);
        let dt = 1.0 / (m - 1) as f64;
        let signal: Vec<f64> = (0..m)
            .map(|i| {
                let x = i as f64 * dt * (knots.len() - 1) as f64;
                let s = (x.floor() as usize).min(knots.len() - 2);
                let w = x - s as f64;
                knots[s] * (1.0 - w) + knots[s + 1] * w
            })
            .collect();
        let k = rng.gen_range(0.5..20.0);
        let u = TimeSampledFunction::scalar(0.0, dt, &signal)?;
        for (sup, conv) in [
            (true, sup_convolution_time(&u, k)?),
            (false, inf_convolution_time(&u, k)?),
        ] {
            if let Some(msg) = check_convolution(&signal, dt, &conv, sup) {
                failures.push(format!(
                    "case {case} {}: {msg}",
                    if sup { "sup" } else { "inf" }
                ));
            }
        }
    }
    let detail = match failures.first() {
        None => format!("{cases} signals, sup and inf"),
        Some(first) => format!("{} failures, first: {first}", failures.len()),
    };
    report.push(
        "sandwich, Lipschitz, attainment, oracle",
        failures.is_empty(),
        detail,
    );
    Ok(report)
}

/// Inputs of [`convergence_suite`].
#[derive(Clone, Debug)]
pub struct ConvergenceSettings {
    pub problem: ProblemSpec,
    pub run: RunOptions,
    pub elliptic: EllipticOptions,
    pub tolerances: Tolerances,
    /// Final-distance bound used when `F` is not linear.
    pub final_tol: f64,
}

impl ConvergenceSettings {
    /// `F = r`, `μ = 1`, `φ₀ = |z|² − 1` on the unit disc, snapshots every 0.1.
    pub fn rate_test(h: f64, horizon: f64) -> Result<Self, HarnessError> {
        let op = ball_operator(1, h)?;
        let problem = ProblemSpec::from_fn(
            op,
            Nonlinearity::linear(1.0),
            Density::constant(1.0),
            |z: &[f64]| z.iter().map(|x| x * x).sum::<f64>() - 1.0,
        )?
        .with_horizon(horizon)?;
        let steps = (horizon * 10.0).round().max(1.0) as usize;
        Ok(Self {
            problem,
            run: RunOptions {
                c_cfl: 0.9,
                ..RunOptions::default()
            }
            .equispaced(horizon, steps),
            elliptic: EllipticOptions {
                tol: 1e-11,
                omega: EllipticOptions::sor_for(h, 2.0),
                ..EllipticOptions::default()
            },
            tolerances: Tolerances::default(),
            final_tol: 5e-3,
        })
    }
}

/// Flow against the steady Dirichlet solution. For `F = αr + c` with `α > 0`:
/// `sup|φₜ − ψ| ≤ e^{−αt}·sup|φ₀ − ψ| + 10·steady_tol` at every snapshot and
/// a fitted decay rate of at most `−0.85α`. Otherwise the final distance must
/// be within `final_tol`.
pub fn convergence_suite(
    settings: &ConvergenceSettings,
) -> Result<(SuiteReport, Trajectory), HarnessError> {
    let mut report = SuiteReport::new("convergence");
    let problem = &settings.problem;
    let steady_tol = settings.tolerances.steady_tol;
    let reference = solve_steady(problem, &settings.elliptic)?;
    let traj = run_flow(problem, &settings.run)?;
    let window = settings.tolerances.rate_window;
    let rows = convergence_table_with(&reference.field, &traj, steady_tol, window)?;
    let d0 = rows.first().map_or(0.0, |r| r.distance);
    let last = rows.last().map_or(f64::NAN, |r| r.distance);
    match problem.nonlinearity().form() {
        NonlinearityForm::Linear { alpha, .. } if alpha > 0.0 => {
            let worst = rows
                .iter()
                .map(|r| r.distance - ((-alpha * r.t).exp() * d0 + 10.0 * steady_tol))
                .fold(f64::NEG_INFINITY, f64::max);
            report.push(
                "exponential bound",
                worst <= 0.0,
                format!(
                    "{} snapshots, max(d - bound)={worst:.3e}, d0={d0:.3e}",
                    rows.len()
                ),
            );
            match convergence_report_with(&reference.field, &traj, steady_tol, window) {
                Ok(r) => report.push(
                    "decay rate",
                    r.rate <= -0.85 * alpha,
                    format!(
                        "fitted {:.4} over {} points, alpha {alpha}",
                        r.rate, r.window_points
                    ),
                ),
                Err(e) => report.push("decay rate", false, e.to_string()),
            }
        }
        _ => report.push(
            "final distance",
            last <= settings.final_tol,
            format!("d(T)={last:.3e}, tol {:.1e}", settings.final_tol),
        ),
    }
    Ok((report, traj))
}

/// Every suite with `seed`: comparison (100 pairs), psh, convergence
/// (`h = 1/16`), regularize (200 signals).
pub fn verify_all(seed: u64) -> Result<Vec<SuiteReport>, HarnessError> {
    let tolerances = Tolerances::default();
    Ok(vec![
        comparison_suite(seed, 100, tolerances.cert_tol)?,
        psh_suite(seed, 1.0 / 16.0, &tolerances)?,
        convergence_suite(&ConvergenceSettings::rate_test(1.0 / 16.0, 6.0)?)?.0,
        regularize_suite(seed, 200)?,
    ])
}
