mod common;

use common::*;
use proptest::prelude::*;
use swarmlink::dynamics::{spectral_norm, symmetric_eigenvalues, RobotModel, RobotState};
use swarmlink::simulator::rk4_step;
use swarmlink::{Mat2, Vec2};

#[test]
fn model_validation_rejects_nonphysical_parameters() {
    assert!(RobotModel::PointMass { mass: 0.0 }.validate().is_err());
    assert!(RobotModel::PointMass { mass: f64::INFINITY }.validate().is_err());
    let mut arm = ARMS[0];
    arm.i2 = 0.0;
    assert!(arm.model().validate().is_err());
    assert!(ARMS[0].model().validate().is_ok());
}

#[test]
fn point_mass_bounds_are_exact() {
    let b = RobotModel::PointMass { mass: 2.5 }.bounds();
    assert_eq!((b.lambda_min, b.lambda_max, b.coriolis), (2.5, 2.5, 0.0));
}

#[test]
fn small_matrix_helpers_agree_with_jacobi() {
    let m = Mat2::new(2.0, 0.7, 0.7, 1.0);
    let (lo, hi) = symmetric_eigenvalues(&m);
    let eigs = jacobi_eigenvalues(vec![vec![2.0, 0.7], vec![0.7, 1.0]]);
    assert!((lo - eigs[0]).abs() < 1e-14 && (hi - eigs[1]).abs() < 1e-14);
    let c = Mat2::new(0.0, 3.0, -1.0, 0.0);
    assert!((spectral_norm(&c) - 3.0).abs() < 1e-14);
}

#[test]
fn inertia_matches_the_energy_method() {
    for arm in ARMS {
        let model = arm.model();
        for k in 0..50 {
            let q = Vec2::new(0.3 * k as f64 - 7.0, 0.41 * k as f64 - 10.0);
            let m = model.mass_matrix(&q);
            let reference = arm.mass_by_energy([q.x, q.y]);
            for a in 0..2 {
                for b in 0..2 {
                    assert!((m[(a, b)] - reference[a][b]).abs() < 1e-9);
                }
            }
        }
    }
}

/// Without external force the arm conserves kinetic energy.
#[test]
fn unforced_arm_conserves_energy() {
    let model = ARMS[1].model();
    let mut s = vec![RobotState::new(Vec2::new(0.1, 0.4), Vec2::new(2.0, -1.0))];
    let e0 = model.kinetic_energy(&s[0]);
    let dt = 1e-3;
    for k in 0..5000 {
        s = rk4_step(&s, k as f64 * dt, dt, |_, st: &[RobotState]| Ok(vec![model.accel(&st[0], &Vec2::zeros())?]))
            .unwrap();
    }
    let drift = (model.kinetic_energy(&s[0]) - e0).abs() / e0;
    assert!(drift < 1e-9, "relative drift {drift:e}");
}

#[test]
fn rk4_is_fourth_order_on_a_forced_point_mass() {
    let model = RobotModel::PointMass { mass: 1.3 };
    let force = |t: f64| Vec2::new((3.0 * t).sin(), (2.0 * t).cos());
    let exact = |t: f64| {
        // x'' = f / m with x(0) = 0, v(0) = 0.
        let x = Vec2::new((3.0 * t - (3.0 * t).sin()) / 9.0, (1.0 - (2.0 * t).cos()) / 4.0) / 1.3;
        let v = Vec2::new((1.0 - (3.0 * t).cos()) / 3.0, (2.0 * t).sin() / 2.0) / 1.3;
        (x, v)
    };
    let horizon = 2.0;
    let err = |dt: f64| {
        let mut s = vec![RobotState::default()];
        let steps = (horizon / dt).round() as usize;
        for k in 0..steps {
            s = rk4_step(&s, k as f64 * dt, dt, |t, st: &[RobotState]| Ok(vec![model.accel(&st[0], &force(t))?]))
                .unwrap();
        }
        let (x, v) = exact(horizon);
        ((s[0].x - x).norm_squared() + (s[0].v - v).norm_squared()).sqrt()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

proptest! {
    #[test]
    fn certified_bounds_hold(which in 0usize..3, q0 in -10.0f64..10.0, q1 in -10.0f64..10.0,
                             y0 in -2.0f64..2.0, y1 in -2.0f64..2.0) {
        let model = ARMS[which].model();
        let b = model.bounds();
        let x = Vec2::new(q0, q1);
        let (lo, hi) = symmetric_eigenvalues(&model.mass_matrix(&x));
        prop_assert!(b.lambda_min <= lo && hi <= b.lambda_max);
        let y = Vec2::new(y0, y1);
        prop_assert!(spectral_norm(&model.coriolis_matrix(&x, &y)) <= b.coriolis * y.norm() + 1e-15);
    }

    #[test]
    fn inertia_derivative_minus_twice_coriolis_is_skew(which in 0usize..3, q0 in -3.2f64..3.2, q1 in -3.2f64..3.2,
                                                       v0 in -3.0f64..3.0, v1 in -3.0f64..3.0,
                                                       y0 in -1.0f64..1.0, y1 in -1.0f64..1.0) {
        let model = ARMS[which].model();
        let (x, v, y) = (Vec2::new(q0, q1), Vec2::new(v0, v1), Vec2::new(y0, y1));
        let md = derivative(|h| {
            let m = model.mass_matrix(&(x + v * h));
            [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
        }, 1e-3);
        let n = Mat2::new(md[0], md[1], md[2], md[3]) - model.coriolis_matrix(&x, &v) * 2.0;
        let scale = Mat2::new(md[0], md[1], md[2], md[3]).abs().sum() + 1.0;
        prop_assert!((y.dot(&(n * y))).abs() <= 1e-8 * scale * y.norm_squared().max(1e-300));
        let reference = ARMS[which].coriolis_applied([q0, q1], [v0, v1], [v0, v1]);
        prop_assert!((model.coriolis_matrix(&x, &v) * v - Vec2::from(reference)).norm() <= 1e-7 * v.norm_squared().max(1.0));
    }
}
