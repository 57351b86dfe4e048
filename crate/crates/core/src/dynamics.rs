//! Euler-Lagrange robot models `M(x) ẍ + C(x, ẋ) ẋ = u`.
//!
//! Two planar (n = 2) kinds are provided: a point mass, whose inertia is
//! constant and Coriolis term vanishes, and a two-link revolute arm in joint
//! space. Both satisfy
//!
//! - P.1 `λ₁ I ⪯ M(x) ⪯ λ₂ I`,
//! - P.2 `Ṁ(x) − 2 C(x, ẋ)` skew-symmetric,
//! - P.3 `‖C(x, y) z‖ ≤ c ‖y‖ ‖z‖`,
//!
//! with constants returned by [`RobotModel::certify_bounds`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Samples drawn by [`RobotModel::bounds`].
pub const DEFAULT_BOUND_SAMPLES: usize = 4096;
/// Multiplicative margin applied to sampled bounds.
pub const BOUND_MARGIN: f64 = 0.1;
const BOUND_SEED: u64 = 0x5EED_B0DE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RobotModel {
    PointMass {
        mass: f64,
    },
    /// Revolute two-link arm; `lc*` are distances from each joint to its link's
    /// centre of mass and `i*` the link inertias about that centre.
    TwoLink {
        m1: f64,
        m2: f64,
        l1: f64,
        lc1: f64,
        lc2: f64,
        i1: f64,
        i2: f64,
    },
}

/// Certified constants for P.1 and P.3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelBounds {
    /// Lower inertia bound `λ₁`.
    pub lambda_min: f64,
    /// Upper inertia bound `λ₂`.
    pub lambda_max: f64,
    /// Coriolis constant `c`.
    pub coriolis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub x: Vec2,
    pub v: Vec2,
}

impl RobotState {
    pub fn new(x: Vec2, v: Vec2) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }
}

impl RobotModel {
    /// Uniform slender links of length `l` and mass `m`.
    pub fn uniform_two_link(m: f64, l: f64) -> Self {
        RobotModel::TwoLink {
            m1: m,
            m2: m,
            l1: l,
            lc1: 0.5 * l,
            lc2: 0.5 * l,
            i1: m * l * l / 12.0,
            i2: m * l * l / 12.0,
        }
    }

    pub fn dof(&self) -> usize {
        2
    }

    pub fn validate(&self) -> Result<()> {
        let params: Vec<(&str, f64)> = match *self {
            RobotModel::PointMass { mass } => vec![("mass", mass)],
            RobotModel::TwoLink { m1, m2, l1, lc1, lc2, i1, i2 } => {
                vec![("m1", m1), ("m2", m2), ("l1", l1), ("lc1", lc1), ("lc2", lc2), ("i1", i1), ("i2", i2)]
            }
        };
        for (name, v) in params {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Schema(format!("robot parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `(a1, a2, a3)` with `M11 = a1 + 2 a2 cos q2`, `M12 = a3 + a2 cos q2`, `M22 = a3`.
    fn arm_constants(&self) -> Option<(f64, f64, f64)> {
        match *self {
            RobotModel::PointMass { .. } => None,
            RobotModel::TwoLink { m1, m2, l1, lc1, lc2, i1, i2 } => {
                Some((m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + lc2 * lc2) + i2, m2 * l1 * lc2, m2 * lc2 * lc2 + i2))
            }
        }
    }

    pub fn mass_matrix(&self, x: &Vec2) -> Mat2 {
        match *self {
            RobotModel::PointMass { mass } => Mat2::identity() * mass,
            RobotModel::TwoLink { .. } => {
                let (a1, a2, a3) = self.arm_constants().unwrap_or_default();
                let c2 = x[1].cos();
                let off = a3 + a2 * c2;
                Mat2::new(a1 + 2.0 * a2 * c2, off, off, a3)
            }
        }
    }

    pub fn coriolis_matrix(&self, x: &Vec2, xdot: &Vec2) -> Mat2 {
        match self.arm_constants() {
            None => Mat2::zeros(),
            Some((_, a2, _)) => {
                let h = -a2 * x[1].sin();
                Mat2::new(h * xdot[1], h * (xdot[0] + xdot[1]), -h * xdot[0], 0.0)
            }
        }
    }

    /// `M(x)⁻¹ (force − C(x, ẋ) ẋ)`.
    pub fn accel(&self, state: &RobotState, total_force: &Vec2) -> Result<Vec2> {
        if let RobotModel::PointMass { mass } = *self {
            return Ok(total_force / mass);
        }
        let m = self.mass_matrix(&state.x);
        let rhs = total_force - self.coriolis_matrix(&state.x, &state.v) * state.v;
        m.cholesky().map(|ch| ch.solve(&rhs)).ok_or(Error::SingularInertia { x: [state.x[0], state.x[1]] })
    }

    pub fn kinetic_energy(&self, state: &RobotState) -> f64 {
        0.5 * state.v.dot(&(self.mass_matrix(&state.x) * state.v))
    }

    /// Sampling certificate for P.1 / P.3 with a 10% safety margin.
    ///
    /// The arm's inertia depends on the elbow angle only and its Coriolis
    /// matrix is linear in `y`, so sampling the joint box `[−π, π]²` and unit
    /// directions `y` covers the whole joint space.
    pub fn certify_bounds(&self, n_samples: usize) -> ModelBounds {
        if let RobotModel::PointMass { mass } = *self {
            return ModelBounds { lambda_min: mass, lambda_max: mass, coriolis: 0.0 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(BOUND_SEED);
        let mut eig_min = f64::INFINITY;
        let mut eig_max = 0.0_f64;
        let mut c_max = 0.0_f64;
        // Extended and folded elbows attain the extremes; include them exactly.
        let fixed = [0.0, PI, -PI, 0.5 * PI];
        let n = n_samples.max(1000);
        for k in 0..n + fixed.len() {
            let x = if k < fixed.len() {
                Vec2::new(0.0, fixed[k])
            } else {
                Vec2::new(rng.random_range(-PI..=PI), rng.random_range(-PI..=PI))
            };
            let (lo, hi) = symmetric_eigenvalues(&self.mass_matrix(&x));
            eig_min = eig_min.min(lo);
            eig_max = eig_max.max(hi);
            let angle: f64 = rng.random_range(0.0..2.0 * PI);
            let y = Vec2::new(angle.cos(), angle.sin());
            c_max = c_max.max(spectral_norm(&self.coriolis_matrix(&x, &y)));
        }
        // |sin q2| = 1 maximises the Coriolis gain; sample that slice as well.
        for k in 0..360 {
            let angle = k as f64 * PI / 180.0;
            let y = Vec2::new(angle.cos(), angle.sin());
            c_max = c_max.max(spectral_norm(&self.coriolis_matrix(&Vec2::new(0.0, 0.5 * PI), &y)));
        }
        ModelBounds {
            lambda_min: (1.0 - BOUND_MARGIN) * eig_min,
            lambda_max: (1.0 + BOUND_MARGIN) * eig_max,
            coriolis: (1.0 + BOUND_MARGIN) * c_max,
        }
    }

    pub fn bounds(&self) -> ModelBounds {
        self.certify_bounds(DEFAULT_BOUND_SAMPLES)
    }
}

/// Eigenvalues `(min, max)` of a symmetric 2x2 matrix.
pub fn symmetric_eigenvalues(m: &Mat2) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let radius = half_diff.hypot(m[(0, 1)]);
    (mean - radius, mean + radius)
}

/// Largest singular value of a 2x2 matrix.
pub fn spectral_norm(m: &Mat2) -> f64 {
    symmetric_eigenvalues(&(m.transpose() * m)).1.max(0.0).sqrt()
}
