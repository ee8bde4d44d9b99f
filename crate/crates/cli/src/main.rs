use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cmaflow::barriers::{
    boundary_superbarrier, eps_subbarrier, eps_superbarrier_from, global_supersolution,
    Admissibility, BarrierSpec, ParabolicPoint,
};
use cmaflow::elliptic::{convergence_table_with, solve_steady};
use cmaflow::harness::{
    comparison_check, comparison_suite, convergence_suite, psh_suite, regularize_suite,
    report_emit, theorem_a_check, CheckOutcome, Config, ConvergenceSettings, RunArtifacts,
    SuiteReport, PRESETS,
};
use cmaflow::pshtools::{is_psh_with, maximality_defect_with};
use cmaflow::{check_admissible, global_subsolution, run_flow, Execution};

#[derive(Parser)]
#[command(
    name = "cmaflow",
    version,
    about = "Monotone solver and verification harness for complex Monge-Ampere flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parabolic runs.
    Flow {
        #[command(subcommand)]
        action: FlowAction,
    },
    /// Stationary Dirichlet problem.
    Elliptic {
        #[command(subcommand)]
        action: EllipticAction,
    },
    /// Barrier construction and certification.
    Barriers {
        #[command(subcommand)]
        action: BarrierAction,
    },
    /// Seeded verification suites.
    Verify(VerifyArgs),
    /// Print a built-in configuration.
    Preset { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// Sectioned key = value configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `cmaflow preset`).
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Config> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Ok(Config::load(path)?),
            (None, Some(name)) => {
                Config::preset(name).with_context(|| format!("unknown preset {name}"))
            }
            (None, None) => bail!("pass --config <file> or --preset <name>"),
        }
    }
}

#[derive(Subcommand)]
enum FlowAction {
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Skip the steady-state reference and the convergence table.
        #[arg(long)]
        no_reference: bool,
    },
}

#[derive(Subcommand)]
enum EllipticAction {
    Solve {
        #[command(flatten)]
        source: Source,
        /// Write the solution as `psi.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BarrierAction {
    Certify {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Comparison,
    Psh,
    Convergence,
    Regularize,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of randomized cases (comparison and regularize).
    #[arg(long)]
    cases: Option<usize>,
    /// Configuration for the convergence suite; defaults to the rate test.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lattice spacing for the psh and default convergence suites.
    #[arg(long, default_value_t = 1.0 / 16.0)]
    h: f64,
}

fn print_outcomes(checks: &[CheckOutcome]) -> bool {
    for c in checks {
        println!("{c}");
    }
    checks.iter().all(|c| c.pass)
}

fn flow_run(source: &Source, out: &Path, no_reference: bool) -> Result<bool> {
    let cfg = source.load()?;
    let problem = cfg.problem()?;
    let opts = cfg.run_options()?;
    let tolerances = cfg.tolerances()?;
    let traj = run_flow(&problem, &opts)?;
    let h = problem.mesh().h();
    let psh = theorem_a_check(&traj, problem.op().frames(), tolerances.psh_tol(h))?;

    let mut art = RunArtifacts::new(traj);
    if !no_reference {
        let reference = solve_steady(&problem, &cfg.elliptic_options(problem.op())?)?;
        art.convergence = convergence_table_with(
            &reference.field,
            &art.trajectory,
            tolerances.steady_tol,
            tolerances.rate_window,
        )?;
        art.push_summary("reference_sweeps", reference.sweeps);
    }
    art.push_summary("F", problem.nonlinearity().label());
    art.push_summary("mu", problem.density().label());
    art.push_summary("h", h);
    art.push_summary("interior_nodes", problem.mesh().interior().len());
    art.push_summary("psh_tol", psh.tol);
    art.push_summary("psh_pass", psh.pass);
    let files = report_emit(&art, out)?;
    let outcome = CheckOutcome::new(
        "snapshots psh",
        psh.pass,
        format!(
            "{} snapshots, {} steps, {} files in {}",
            art.trajectory.len(),
            art.trajectory.steps(),
            files.len(),
            out.display()
        ),
    );
    Ok(print_outcomes(&[outcome]))
}

fn elliptic_solve(source: &Source, out: Option<&Path>) -> Result<bool> {
    let cfg = source.load()?;
    let problem = cfg.problem()?;
    let op = problem.op();
    let sol = solve_steady(&problem, &cfg.elliptic_options(op)?)?;
    let tol = cfg.tolerances()?.psh_tol(problem.mesh().h());
    let psh = is_psh_with(op, &sol.field, tol, Execution::Auto)?;
    let mut checks = vec![
        CheckOutcome::new(
            "converged",
            true,
            format!(
                "{} sweeps, last change {:.3e}, residual {:.3e}",
                sol.sweeps, sol.last_change, sol.residual
            ),
        ),
        CheckOutcome::new(
            "solution psh",
            psh.pass,
            format!("min line Laplacian {:.3e}", psh.min_line_laplacian),
        ),
    ];
    if problem.density().constant_value() == Some(0.0) {
        let defect = maximality_defect_with(op, &sol.field, None, Execution::Auto)?;
        checks.push(CheckOutcome::new(
            "maximal",
            defect <= cmaflow::tolerances::MAXIMALITY_TOL,
            format!("defect {defect:.3e}"),
        ));
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("psi.csv");
        std::fs::write(&path, sol.field.to_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(print_outcomes(&checks))
}

fn describe(spec: &BarrierSpec) -> CheckOutcome {
    let c = &spec.certification;
    CheckOutcome::new(
        spec.kind.name(),
        c.pass,
        format!(
            "slack {:.3e}, data {:.3e}, contact {:.3e}",
            c.slack, c.data_slack, c.contact
        ),
    )
}

fn barriers_certify(source: &Source) -> Result<bool> {
    let cfg = source.load()?;
    let problem = cfg.problem()?;
    let grid = cfg.barrier_grid()?;
    let eps = cfg.barrier_eps()?;
    let mesh = problem.mesh();
    let mut checks = Vec::new();

    let sub = global_subsolution(&problem, grid)?;
    let sup = global_supersolution(&problem, grid)?;
    checks.push(describe(&sub));
    checks.push(describe(&sup));
    let cmp = comparison_check(
        &sub.certified(),
        &sup.certified(),
        cfg.tolerances()?.cert_tol,
    )?;
    checks.push(CheckOutcome::new(
        "comparison global pair",
        cmp.pass,
        format!("lhs {:.3e}, rhs {:.3e}", cmp.lhs, cmp.rhs),
    ));

    let center = (0..mesh.active_len())
        .min_by(|&a, &b| {
            let r = |i: usize| mesh.coords(i).iter().map(|x| x * x).sum::<f64>();
            r(a).total_cmp(&r(b))
        })
        .expect("mesh has nodes");
    checks.push(describe(&eps_subbarrier(
        &problem,
        eps,
        ParabolicPoint::Initial { node: center },
        grid,
    )?));

    match check_admissible(&problem, eps)? {
        Admissibility::Certified(cert) => {
            checks.push(CheckOutcome::new(
                "admissible",
                true,
                format!(
                    "C {:.4}, sigma {:.3e}, mollify error {:.3e}",
                    cert.c, cert.sigma, cert.mollify_error
                ),
            ));
            checks.push(describe(&eps_superbarrier_from(&problem, &cert, grid)?));
            checks.push(describe(&boundary_superbarrier(&problem, &cert, grid)?));
        }
        Admissibility::Refused(r) => checks.push(CheckOutcome::new(
            "admissible",
            false,
            format!(
                "refused: {} witness nodes, defect {:.3e}",
                r.witness.len(),
                r.defect
            ),
        )),
    }
    Ok(print_outcomes(&checks))
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let seed = args.seed.unwrap_or(0);
    let cfg = args.config.as_deref().map(Config::load).transpose()?;
    let tolerances = cfg
        .as_ref()
        .map(Config::tolerances)
        .transpose()?
        .unwrap_or_default();
    let selected = |s: Suite| args.suite == s || args.suite == Suite::All;
    let mut reports: Vec<SuiteReport> = Vec::new();
    if selected(Suite::Comparison) {
        reports.push(comparison_suite(
            seed,
            args.cases.unwrap_or(100),
            tolerances.cert_tol,
        )?);
    }
    if selected(Suite::Psh) {
        reports.push(psh_suite(seed, args.h, &tolerances)?);
    }
    if selected(Suite::Convergence) {
        let settings = match &cfg {
            Some(cfg) => {
                let problem = cfg.problem()?;
                ConvergenceSettings {
                    run: cfg.run_options()?,
                    elliptic: cfg.elliptic_options(problem.op())?,
                    problem,
                    tolerances,
                    final_tol: 5e-3,
                }
            }
            None => ConvergenceSettings::rate_test(args.h, 6.0)?,
        };
        reports.push(convergence_suite(&settings)?.0);
    }
    if selected(Suite::Regularize) {
        reports.push(regularize_suite(seed, args.cases.unwrap_or(200))?);
    }
    for r in &reports {
        print!("{r}");
    }
    Ok(reports.iter().all(SuiteReport::pass))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Flow {
            action:
                FlowAction::Run {
                    source,
                    out,
                    no_reference,
                },
        } => flow_run(&source, &out, no_reference),
        Command::Elliptic {
            action: EllipticAction::Solve { source, out },
        } => elliptic_solve(&source, out.as_deref()),
        Command::Barriers {
            action: BarrierAction::Certify { source },
        } => barriers_certify(&source),
        Command::Verify(args) => verify(&args),
        Command::Preset { name: None } => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(true)
        }
        Command::Preset { name: Some(name) } => {
            let cfg = Config::preset(&name).with_context(|| format!("unknown preset {name}"))?;
            print!("{}", cfg.to_text());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
