//! Distributed dynamic coupling and damping injection.
//!
//! Robot `i` applies
//!
//! ```text
//! u_i = −K_i(t) s_i − D_i ẋ_i − B_i θ_i,    s_i = ẋ_i + σ θ_i,
//! θ_i = Σ_{j ∈ N_i(0)} ∇ᵢψ(‖x_ij‖),
//! ```
//!
//! with the state-dependent gain
//!
//! ```text
//! K_i(t) = ½ ρ λ_i2 + σ Σ_j Λ_ij(t) + Γ_i / (B_1 + σ D_1)²
//! ```
//!
//! so that the residual gain `K̄_i(t)` stays exactly at `½ ρ λ_i2`. Only the
//! robot's own state and the positions of its initial neighbours are read.

mod design;

pub use design::{design_gains, DesignConditions, DesignOutcome, DesignProblem, Heuristics, MAX_DESIGN_ROUNDS};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelBounds, RobotModel, RobotState};
use crate::error::Result;
use crate::graph::TreeNetwork;
use crate::potential::{grad_psi, gradient_weight, PotentialParams};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainDesign {
    /// Target decay rate.
    pub rho: f64,
    /// Surface gain.
    pub sigma: f64,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub zeta: Vec<f64>,
    /// User-energy splitter `Γ`.
    pub big_gamma: f64,
    /// Coupling gains `B_i`.
    pub b: Vec<f64>,
    /// Damping gains `D_i`.
    pub d: Vec<f64>,
    /// Energy headroom `Δ`.
    pub delta: f64,
    /// User force bound `f̄`.
    pub f_bar: f64,
}

impl GainDesign {
    pub fn n_robots(&self) -> usize {
        self.b.len()
    }

    /// `B_i + σ D_i`, the per-robot Lyapunov weight.
    pub fn weight(&self, i: usize) -> f64 {
        self.b[i] + self.sigma * self.d[i]
    }

    pub fn splitters(&self, i: usize) -> Splitters {
        Splitters { eta: self.eta[i], gamma: self.gamma[i], zeta: self.zeta[i] }
    }

    /// `Γ_i / (B_1 + σ D_1)²`: only the informed slave (index 0) carries it.
    pub fn user_term(&self, i: usize) -> f64 {
        if i == 0 {
            self.big_gamma / self.weight(0).powi(2)
        } else {
            0.0
        }
    }

    /// `D̄_i = D_i − 2σ Σ_j (η_i + γ_i + ζ_i + η_j + γ_j)`.
    pub fn damping_residual(&self, tree: &TreeNetwork, i: usize) -> f64 {
        self.d[i] - damping_requirement(self.sigma, &self.eta, &self.gamma, &self.zeta, tree, i)
    }

    /// `K̄_i = K_i − σ Σ_j Λ_ij − Γ_i / (B_1 + σ D_1)²`.
    pub fn residual_gain(&self, i: usize, k: f64, lambda_sum: f64) -> f64 {
        k - self.sigma * lambda_sum - self.user_term(i)
    }

    /// `χ(‖f‖) = ‖f‖² / (4 ρ Γ)`.
    pub fn chi(&self, force_norm: f64) -> f64 {
        force_norm * force_norm / (4.0 * self.rho * self.big_gamma)
    }
}

pub(crate) fn damping_requirement(
    sigma: f64,
    eta: &[f64],
    gamma: &[f64],
    zeta: &[f64],
    tree: &TreeNetwork,
    i: usize,
) -> f64 {
    2.0 * sigma * tree.neighbors(i).iter().map(|&j| eta[i] + gamma[i] + zeta[i] + eta[j] + gamma[j]).sum::<f64>()
}

/// Young-inequality splitters `(η_i, γ_i, ζ_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splitters {
    pub eta: f64,
    pub gamma: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u: Vec2,
    /// Gain `K_i` applied at this instant.
    pub k: f64,
    pub s: Vec2,
    pub theta: Vec2,
    /// `Σ_j Λ_ij`.
    pub lambda_sum: f64,
}

pub fn theta(i: usize, positions: &[Vec2], tree: &TreeNetwork, params: &PotentialParams) -> Result<Vec2> {
    tree.neighbors(i)
        .iter()
        .try_fold(Vec2::zeros(), |acc, &j| Ok(acc + grad_psi(&positions[i], &positions[j], params)?))
}

pub fn surface(state: &RobotState, theta: &Vec2, sigma: f64) -> Vec2 {
    state.v + theta * sigma
}

/// `Λ_ij` for robot `i` at squared link length `dist_sq`.
pub fn lambda_ij(dist_sq: f64, bounds: &ModelBounds, split: &Splitters, params: &PotentialParams) -> Result<f64> {
    // Same domain as the gradient: the link must still exist.
    gradient_weight(dist_sq, params)?;
    let r_sq = params.r * params.r;
    let den = r_sq - dist_sq + params.q;
    let den2 = den * den;
    let den4 = den2 * den2;
    let scale = (params.p * (r_sq + params.q)).powi(2);
    let lam2 = bounds.lambda_max * bounds.lambda_max;
    let stretch = 16.0 * lam2 * scale * dist_sq * dist_sq / (split.eta * den4 * den2);
    let base = lam2 * scale / (split.gamma * den4);
    let coriolis = bounds.coriolis * bounds.coriolis * scale * dist_sq / (2.0 * split.zeta * den4);
    Ok(stretch + base + coriolis)
}

fn lambda_sum(
    i: usize,
    positions: &[Vec2],
    tree: &TreeNetwork,
    design: &GainDesign,
    params: &PotentialParams,
    bounds: &ModelBounds,
) -> Result<f64> {
    let split = design.splitters(i);
    tree.neighbors(i).iter().try_fold(0.0, |acc, &j| {
        Ok(acc + lambda_ij((positions[i] - positions[j]).norm_squared(), bounds, &split, params)?)
    })
}

/// Scheduled gain `K_i(t)` (equality case, `K̄_i = ½ ρ λ_i2`).
pub fn gain_k(
    i: usize,
    positions: &[Vec2],
    tree: &TreeNetwork,
    design: &GainDesign,
    params: &PotentialParams,
    bounds: &ModelBounds,
) -> Result<f64> {
    let lambdas = lambda_sum(i, positions, tree, design, params, bounds)?;
    Ok(scheduled_gain(i, lambdas, design, bounds))
}

fn scheduled_gain(i: usize, lambda_sum: f64, design: &GainDesign, bounds: &ModelBounds) -> f64 {
    0.5 * design.rho * bounds.lambda_max + design.sigma * lambda_sum + design.user_term(i)
}

/// Control force of robot `i`.
pub fn control(
    i: usize,
    positions: &[Vec2],
    velocities: &[Vec2],
    tree: &TreeNetwork,
    design: &GainDesign,
    params: &PotentialParams,
    bounds: &ModelBounds,
) -> Result<ControlOutput> {
    let lambdas = lambda_sum(i, positions, tree, design, params, bounds)?;
    let k = scheduled_gain(i, lambdas, design, bounds);
    control_with_gain(i, k, lambdas, positions, velocities, tree, design, params)
}

#[allow(clippy::too_many_arguments)]
fn control_with_gain(
    i: usize,
    k: f64,
    lambda_sum: f64,
    positions: &[Vec2],
    velocities: &[Vec2],
    tree: &TreeNetwork,
    design: &GainDesign,
    params: &PotentialParams,
) -> Result<ControlOutput> {
    let th = theta(i, positions, tree, params)?;
    let s = velocities[i] + th * design.sigma;
    let u = -s * k - velocities[i] * design.d[i] - th * design.b[i];
    Ok(ControlOutput { u, k, s, theta: th, lambda_sum })
}

/// How `K_i(t)` is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GainSchedule {
    /// Re-evaluated from the current link lengths.
    Dynamic,
    /// Held at fixed values (used as a negative control).
    Frozen(Vec<f64>),
}

/// A closed-loop controller for the whole swarm.
#[derive(Debug, Clone)]
pub struct Controller {
    pub tree: TreeNetwork,
    pub params: PotentialParams,
    pub design: GainDesign,
    pub bounds: Vec<ModelBounds>,
    pub schedule: GainSchedule,
}

impl Controller {
    pub fn new(tree: TreeNetwork, params: PotentialParams, design: GainDesign, bounds: Vec<ModelBounds>) -> Self {
        Self { tree, params, design, bounds, schedule: GainSchedule::Dynamic }
    }

    /// Freezes every `K_i` at its value for `positions`.
    pub fn freeze_gains(&mut self, positions: &[Vec2]) -> Result<()> {
        let gains = (0..self.tree.n_vertices())
            .map(|i| gain_k(i, positions, &self.tree, &self.design, &self.params, &self.bounds[i]))
            .collect::<Result<Vec<_>>>()?;
        self.schedule = GainSchedule::Frozen(gains);
        Ok(())
    }

    pub fn control(&self, i: usize, positions: &[Vec2], velocities: &[Vec2]) -> Result<ControlOutput> {
        let lambdas = lambda_sum(i, positions, &self.tree, &self.design, &self.params, &self.bounds[i])?;
        let k = match &self.schedule {
            GainSchedule::Dynamic => scheduled_gain(i, lambdas, &self.design, &self.bounds[i]),
            GainSchedule::Frozen(k) => k[i],
        };
        control_with_gain(i, k, lambdas, positions, velocities, &self.tree, &self.design, &self.params)
    }

    pub fn control_all(&self, positions: &[Vec2], velocities: &[Vec2]) -> Result<Vec<ControlOutput>> {
        (0..self.tree.n_vertices()).map(|i| self.control(i, positions, velocities)).collect()
    }
}

/// `θ̇_i` in closed form.
pub fn theta_dot(
    i: usize,
    positions: &[Vec2],
    velocities: &[Vec2],
    tree: &TreeNetwork,
    params: &PotentialParams,
) -> Result<Vec2> {
    let r_sq = params.r * params.r;
    let scale = 2.0 * params.p * (r_sq + params.q);
    tree.neighbors(i).iter().try_fold(Vec2::zeros(), |acc, &j| {
        let x = positions[i] - positions[j];
        let v = velocities[i] - velocities[j];
        let dist_sq = x.norm_squared();
        gradient_weight(dist_sq, params)?;
        let den = r_sq - dist_sq + params.q;
        Ok(acc + x * (4.0 * scale * x.dot(&v) / (den * den * den)) + v * (scale / (den * den)))
    })
}

/// Mismatch `Δ_i = M_i(x_i) θ̇_i + C_i(x_i, ẋ_i) θ_i` of the reduced dynamics.
pub fn mismatch_delta(
    i: usize,
    positions: &[Vec2],
    velocities: &[Vec2],
    tree: &TreeNetwork,
    params: &PotentialParams,
    model: &RobotModel,
) -> Result<Vec2> {
    let th = theta(i, positions, tree, params)?;
    let th_dot = theta_dot(i, positions, velocities, tree, params)?;
    Ok(model.mass_matrix(&positions[i]) * th_dot + model.coriolis_matrix(&positions[i], &velocities[i]) * th)
}

/// Both sides of the three mismatch inequalities for robot `i`:
/// the inertia part, the Coriolis part, and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchBounds {
    /// `s_iᵀ M_i θ̇_i` and its bound.
    pub inertia: (f64, f64),
    /// `s_iᵀ C_i θ_i` and its bound.
    pub coriolis: (f64, f64),
    /// `s_iᵀ Δ_i` and `Σ_j [Λ_ij s_iᵀs_i + 2(η_i+γ_i)‖ẋ_j‖² + 2(η_i+γ_i+ζ_i)‖ẋ_i‖²]`.
    pub total: (f64, f64),
}

#[allow(clippy::too_many_arguments)]
pub fn mismatch_bounds(
    i: usize,
    positions: &[Vec2],
    velocities: &[Vec2],
    tree: &TreeNetwork,
    design: &GainDesign,
    params: &PotentialParams,
    model: &RobotModel,
    bounds: &ModelBounds,
) -> Result<MismatchBounds> {
    let th = theta(i, positions, tree, params)?;
    let th_dot = theta_dot(i, positions, velocities, tree, params)?;
    let s = velocities[i] + th * design.sigma;
    let ss = s.norm_squared();
    let vi = velocities[i].norm_squared();
    let split = design.splitters(i);

    let r_sq = params.r * params.r;
    let scale = (params.p * (r_sq + params.q)).powi(2);
    let lam2 = bounds.lambda_max.powi(2);
    let c2 = bounds.coriolis.powi(2);

    let mut inertia_rhs = 0.0;
    let mut coriolis_rhs = 0.0;
    let mut total_rhs = 0.0;
    for &j in tree.neighbors(i) {
        let dist_sq = (positions[i] - positions[j]).norm_squared();
        let den = r_sq - dist_sq + params.q;
        let vj = velocities[j].norm_squared();
        inertia_rhs += 2.0 * (split.eta + split.gamma) * (vi + vj)
            + 16.0 * lam2 * scale * dist_sq * dist_sq / (split.eta * den.powi(6)) * ss
            + lam2 * scale / (split.gamma * den.powi(4)) * ss;
        coriolis_rhs += c2 * scale * dist_sq / (2.0 * split.zeta * den.powi(4)) * ss + 2.0 * split.zeta * vi;
        total_rhs += lambda_ij(dist_sq, bounds, &split, params)? * ss
            + 2.0 * (split.eta + split.gamma) * vj
            + 2.0 * (split.eta + split.gamma + split.zeta) * vi;
    }

    let m_part = s.dot(&(model.mass_matrix(&positions[i]) * th_dot));
    let c_part = s.dot(&(model.coriolis_matrix(&positions[i], &velocities[i]) * th));
    Ok(MismatchBounds {
        inertia: (m_part, inertia_rhs),
        coriolis: (c_part, coriolis_rhs),
        total: (m_part + c_part, total_rhs),
    })
}
