use std::sync::Arc;

use cmaflow::elliptic::{solve_dirichlet, EllipticError, EllipticOptions};
use cmaflow::geometry::dirichlet_trace;
use cmaflow::pshtools::{is_psh, maximality_defect, psh_envelope};
use cmaflow::regularize::{inf_convolution_time, sup_convolution_time, TimeSampledFunction};
use cmaflow::{
    build_mesh, Density, DomainSpec, Execution, GeometryError, MaOperator, NodeClass, Nonlinearity,
    ScalarField,
};
use proptest::prelude::*;

fn op(n: usize, h: f64) -> Arc<MaOperator> {
    let mesh = Arc::new(build_mesh(&DomainSpec::ball(n, 1.0).unwrap(), h, 1).unwrap());
    Arc::new(MaOperator::with_default_frames(mesh).unwrap())
}

fn nsq(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum()
}

#[test]
fn mesh_classes_partition_the_closed_domain() {
    let domain = DomainSpec::ellipsoid(vec![1.0, 0.6]).unwrap();
    let mesh = build_mesh(&domain, 1.0 / 16.0, 1).unwrap();
    assert_eq!(
        mesh.active_len(),
        mesh.interior().len() + mesh.boundary().len()
    );
    for &a in mesh.interior() {
        assert_eq!(mesh.class(a), NodeClass::Interior);
        for axis in 0..4 {
            for sign in [-1, 1] {
                let mut off = [0; 4];
                off[axis] = sign;
                assert!(mesh.neighbor(a, &off).is_some());
            }
        }
    }
    for a in 0..mesh.active_len() {
        assert!(domain.rho(mesh.coords(a)) <= 1e-12);
    }
    assert!(!mesh.boundary().is_empty());
    assert!(build_mesh(&domain, 0.0, 1).is_err());
    assert!(matches!(
        DomainSpec::ball(3, 1.0),
        Err(GeometryError::UnsupportedDimension(3))
    ));
}

#[test]
fn density_is_exact_on_diagonal_quadratics() {
    let op = op(2, 1.0 / 4.0);
    let quad = |a: f64, b: f64| {
        let u = ScalarField::from_fn(op.mesh(), |z| {
            a * (z[0] * z[0] + z[1] * z[1]) + b * (z[2] * z[2] + z[3] * z[3])
        })
        .unwrap();
        op.density(&u, Execution::Auto).unwrap()
    };
    for (a, b) in [(1.0, 1.0), (2.0, 0.5), (0.5, 1.0), (0.4, 1.6)] {
        for &v in quad(a, b).values() {
            assert!((v - a * b).abs() < 1e-10, "a={a} b={b}: {v}");
        }
    }
    // eigenvalue ratio 10 is outside the weight ratios, so the frame minimum overestimates
    for &v in quad(0.3, 3.0).values() {
        assert!((v - 1.05f64.powi(2)).abs() < 1e-10, "{v}");
    }
}

#[test]
fn sequential_and_parallel_density_agree() {
    let op = op(1, 1.0 / 32.0);
    let u = ScalarField::from_fn(op.mesh(), |z| {
        nsq(z) + 0.3 * z[0].powi(4) + 0.1 * z[1].sin()
    })
    .unwrap();
    let a = op.density(&u, Execution::Sequential).unwrap();
    let b = op.density(&u, Execution::Auto).unwrap();
    assert_eq!(a.values(), b.values());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_is_monotone_in_neighbors(bumps in prop::collection::vec(0.0f64..0.5, 1..200), pick in 0usize..1000) {
        let op = op(1, 1.0 / 8.0);
        let mesh = op.mesh();
        let base = ScalarField::from_fn(mesh, nsq).unwrap();
        let k = pick % mesh.interior().len();
        let centre = mesh.interior()[k];
        let mut raised = base.clone();
        for (i, v) in raised.values_mut().iter_mut().enumerate() {
            if i != centre {
                *v += bumps[i % bumps.len()];
            }
        }
        let before = op.density(&base, Execution::Sequential).unwrap().get(k);
        let after = op.density(&raised, Execution::Sequential).unwrap().get(k);
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn time_convolutions_sandwich(values in prop::collection::vec(-1.0f64..1.0, 2..60), k in 0.5f64..50.0) {
        let u = TimeSampledFunction::scalar(0.0, 0.1, &values).unwrap();
        let sup = sup_convolution_time(&u, k).unwrap();
        let inf = inf_convolution_time(&u, k).unwrap();
        for i in 0..values.len() {
            prop_assert!(inf.result.value(i, 0) <= values[i]);
            prop_assert!(sup.result.value(i, 0) >= values[i]);
            if i + 1 < values.len() {
                let step = (sup.result.value(i + 1, 0) - sup.result.value(i, 0)).abs();
                prop_assert!(step <= k * 0.1 * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}

#[test]
fn envelope_lies_below_obstacle_and_is_psh() {
    let op = op(1, 1.0 / 8.0);
    let obstacle = ScalarField::from_fn(op.mesh(), |z| {
        nsq(z) + 0.4 * (-20.0 * nsq(&[z[0] - 0.3, z[1]])).exp()
    })
    .unwrap();
    let env = psh_envelope(&obstacle, op.frames(), 1e-12, 1_000_000).unwrap();
    for (e, o) in env.values().iter().zip(obstacle.values()) {
        assert!(e <= o);
    }
    assert!(is_psh(&env, op.frames(), 1e-9).unwrap().pass);
    assert!(!is_psh(&obstacle, op.frames(), 1e-9).unwrap().pass);
}

#[test]
fn dirichlet_solve_recovers_quadratic() {
    let op = op(1, 1.0 / 16.0);
    let g = dirichlet_trace(op.mesh(), nsq);
    let opts = EllipticOptions {
        omega: EllipticOptions::auto_omega(op.mesh()),
        ..EllipticOptions::default()
    };
    let sol = solve_dirichlet(
        &op,
        &Nonlinearity::zero(),
        &Density::constant(1.0),
        &g,
        &opts,
    )
    .unwrap();
    let exact = ScalarField::from_fn(op.mesh(), nsq).unwrap();
    assert!(sol.field.sup_distance(&exact).unwrap() < 1e-8);

    let harmonic = solve_dirichlet(
        &op,
        &Nonlinearity::zero(),
        &Density::constant(0.0),
        &g,
        &opts,
    )
    .unwrap();
    assert!(maximality_defect(&harmonic.field, None, op.frames()).unwrap() < 1e-8);
    assert!(harmonic
        .field
        .values()
        .iter()
        .zip(exact.values())
        .all(|(a, b)| a >= &(b - 1e-9)));

    assert!(matches!(
        solve_dirichlet(
            &op,
            &Nonlinearity::zero(),
            &Density::constant(1.0),
            &g[1..],
            &opts
        ),
        Err(EllipticError::BoundaryLength { .. })
    ));
}
