use std::hint::black_box;
use std::sync::Arc;

use cmaflow::flow::FlowStepper;
use cmaflow::{
    build_mesh, run_flow, Density, DomainSpec, Execution, FlowState, MaOperator, Nonlinearity,
    ProblemSpec, RunOptions, ScalarField, Scheme,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("auto", Execution::Auto),
];

fn operator(n: usize, h: f64) -> Arc<MaOperator> {
    let mesh = Arc::new(build_mesh(&DomainSpec::ball(n, 1.0).unwrap(), h, 1).unwrap());
    Arc::new(MaOperator::with_default_frames(mesh).unwrap())
}

fn density(c: &mut Criterion) {
    let mut group = c.benchmark_group("ma_density");
    for (n, h) in [(1, 1.0 / 64.0), (2, 1.0 / 8.0)] {
        let op = operator(n, h);
        let field = ScalarField::from_fn(op.mesh(), |z| {
            z.iter().map(|x| x * x).sum::<f64>() + 0.2 * z[0].powi(4)
        })
        .unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(
                BenchmarkId::new(name, format!("n{n}")),
                &exec,
                |b, &exec| b.iter(|| black_box(op.density(&field, exec).unwrap())),
            );
        }
    }
    group.finish();
}

fn flow_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_step");
    let op = operator(1, 1.0 / 64.0);
    let problem = ProblemSpec::from_fn(
        op,
        Nonlinearity::linear(1.0),
        Density::constant(1.0),
        |z: &[f64]| z.iter().map(|x| x * x).sum::<f64>() - 1.0,
    )
    .unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            let mut stepper = FlowStepper::new(&problem, Scheme::Explicit, 1e-12, exec).unwrap();
            let mut state = FlowState::initial(&problem).unwrap();
            b.iter(|| black_box(stepper.step(&mut state, 1e-5, None).unwrap()))
        });
    }
    group.finish();
}

fn short_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_flow_n2");
    group.sample_size(10);
    let op = operator(2, 1.0 / 8.0);
    let problem = ProblemSpec::from_fn(
        op,
        Nonlinearity::zero(),
        Density::constant(1.0),
        |z: &[f64]| z.iter().map(|x| x * x).sum::<f64>(),
    )
    .unwrap()
    .with_horizon(0.05)
    .unwrap();
    for (name, exec) in MODES {
        let opts = RunOptions {
            exec,
            steady_tol: None,
            ..RunOptions::default()
        }
        .equispaced(0.05, 1);
        group.bench_function(name, |b| {
            b.iter(|| black_box(run_flow(&problem, &opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, density, flow_step, short_run);
criterion_main!(benches);
