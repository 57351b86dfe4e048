//! Certified inertia and Coriolis constants for a two-link arm, and a check
//! that the inertia derivative minus twice the Coriolis matrix is skew.

use swarmlink::dynamics::{symmetric_eigenvalues, RobotModel, RobotState};
use swarmlink::{Mat2, Vec2};

fn main() {
    let arm = RobotModel::TwoLink { m1: 1.0, m2: 0.8, l1: 0.5, lc1: 0.25, lc2: 0.2, i1: 0.02, i2: 0.01 };
    let b = arm.bounds();
    println!("lambda1 = {:.6}, lambda2 = {:.6}, c = {:.6}", b.lambda_min, b.lambda_max, b.coriolis);

    for elbow in [0.0, 1.0, 2.0, std::f64::consts::PI] {
        let (lo, hi) = symmetric_eigenvalues(&arm.mass_matrix(&Vec2::new(0.0, elbow)));
        println!("elbow {elbow:.3}: eigenvalues of M in [{lo:.6}, {hi:.6}]");
    }

    let (q, qd) = (Vec2::new(0.4, 1.1), Vec2::new(-0.7, 1.9));
    let h = 1e-6;
    let m_dot = (arm.mass_matrix(&(q + qd * h)) - arm.mass_matrix(&(q - qd * h))) / (2.0 * h);
    let n: Mat2 = m_dot - arm.coriolis_matrix(&q, &qd) * 2.0;
    println!("M' - 2C =\n{n}");
    println!("symmetric part norm {:.2e}", (n + n.transpose()).norm());

    let state = RobotState::new(q, qd);
    let a = arm.accel(&state, &Vec2::new(0.5, 0.0)).expect("inertia is positive definite");
    println!("acceleration under a unit-half torque on the shoulder: ({:.4}, {:.4})", a.x, a.y);
    println!("kinetic energy {:.6}", arm.kinetic_energy(&state));
}
