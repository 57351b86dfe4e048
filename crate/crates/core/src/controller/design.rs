//! Gain design pipeline.
//!
//! 1. heuristic constants `ρ, σ, η_i, γ_i, ζ_i, Γ, B_i`;
//! 2. `D_i` at the equality `D̄_i = 0`;
//! 3. `Q` from the feasibility condition;
//! 4. `P` large enough for both the decay bound and the energy headroom `Δ`.
//!
//! `Δ` contains `‖s_i(0)‖²` and `s_i(0)` contains `σ θ_i(0)`, which is
//! linear in `P`, so step 4 is a fixed point in `P`. It is solved by
//! iterating `P ← select_p(Δ(P))`; when an attempt diverges `σ` is halved and
//! the pipeline restarts.

use serde::{Deserialize, Serialize};

use super::{damping_requirement, theta, GainDesign};
use crate::dynamics::{ModelBounds, RobotState};
use crate::error::{Error, Result};
use crate::graph::TreeNetwork;
use crate::potential::{eq4_p_bound, q_condition, select_p, select_q, PotentialParams};
use crate::Vec2;

/// Total fixed-point rounds across all restarts.
pub const MAX_DESIGN_ROUNDS: usize = 64;
const ROUNDS_PER_ATTEMPT: usize = 16;
const FIXED_POINT_RTOL: f64 = 1e-12;
const P_DIVERGENCE: f64 = 1e12;

/// Step-1 constants, applied uniformly to every robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Heuristics {
    pub rho: f64,
    pub sigma: f64,
    pub eta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub big_gamma: f64,
    pub b: f64,
}

impl Default for Heuristics {
    fn default() -> Self {
        Self { rho: 0.5, sigma: 0.1, eta: 0.5, gamma: 0.5, zeta: 0.5, big_gamma: 1.0, b: 1.0 }
    }
}

impl Heuristics {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("sigma", self.sigma),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("big_gamma", self.big_gamma),
            ("b", self.b),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Schema(format!("heuristic {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Everything the designer needs to know about a scenario.
#[derive(Debug, Clone)]
pub struct DesignProblem<'a> {
    pub tree: &'a TreeNetwork,
    pub bounds: &'a [ModelBounds],
    pub initial: &'a [RobotState],
    pub r: f64,
    pub epsilon: f64,
    pub f_bar: f64,
    pub heuristics: Heuristics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub gains: GainDesign,
    pub params: PotentialParams,
    /// Fixed-point rounds used.
    pub rounds: usize,
    /// Number of times `σ` was halved.
    pub sigma_halvings: u32,
    pub conditions: DesignConditions,
}

/// Every design inequality with its margin (positive means satisfied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConditions {
    /// `[r² − (N−1)(r−ε)²] Q + [r² − (r−ε)²] r²` (> 0).
    pub q_condition: f64,
    /// Lower bound on `P` from the energy headroom.
    pub p_bound_headroom: f64,
    /// Lower bound on `P` from the decay requirement.
    pub p_bound_decay: f64,
    /// `P − p_bound_headroom` (> 0).
    pub p_headroom_margin: f64,
    /// `P − p_bound_decay` (≥ 0).
    pub p_decay_margin: f64,
    /// `min_i D̄_i` (≥ 0).
    pub min_damping_residual: f64,
    /// `Δ` recomputed from the initial state and final `P`.
    pub delta_recomputed: f64,
    /// `|Δ − Δ(P)|`.
    pub delta_mismatch: f64,
    /// `ψ_max − V_p(0) − Δ` (> 0).
    pub psi_max_margin: f64,
    /// `min_i [K̄_i(0) − ½ ρ λ_i2]`, zero under the equality schedule.
    pub schedule_margin: f64,
}

impl DesignConditions {
    pub fn all_hold(&self) -> bool {
        self.rows().iter().all(|r| r.2)
    }

    /// Each condition as `(name, margin, holds)`.
    pub fn rows(&self) -> [(&'static str, f64, bool); 7] {
        let mismatch_tol = 1e-9 * self.delta_recomputed.max(1.0);
        [
            ("Q feasibility", self.q_condition, self.q_condition > 0.0),
            ("P energy headroom", self.p_headroom_margin, self.p_headroom_margin > 0.0),
            ("P decay bound", self.p_decay_margin, self.p_decay_margin >= 0.0),
            ("damping residual", self.min_damping_residual, self.min_damping_residual >= 0.0),
            ("delta fixed point", 0.0 - self.delta_mismatch, self.delta_mismatch <= mismatch_tol),
            ("psi_max headroom", self.psi_max_margin, self.psi_max_margin > 0.0),
            ("gain schedule", self.schedule_margin, self.schedule_margin >= -1e-12),
        ]
    }

    /// Names of the conditions that fail.
    pub fn failures(&self) -> Vec<&'static str> {
        self.rows().iter().filter(|r| !r.2).map(|r| r.0).collect()
    }

    /// Re-evaluates all conditions for a finished design.
    pub fn evaluate(
        tree: &TreeNetwork,
        bounds: &[ModelBounds],
        initial: &[RobotState],
        gains: &GainDesign,
        params: &PotentialParams,
    ) -> Result<Self> {
        let n = tree.n_vertices();
        let (r, eps, q, p) = (params.r, params.epsilon, params.q, params.p);
        let delta_recomputed = headroom(tree, bounds, initial, gains, params)?;
        let p_bound_headroom = eq4_p_bound(r, eps, n, q, gains.delta);
        let p_bound_decay = decay_bound(tree, gains, q, r);
        let min_damping_residual = (0..n).map(|i| gains.damping_residual(tree, i)).fold(f64::INFINITY, f64::min);
        let positions: Vec<Vec2> = initial.iter().map(|s| s.x).collect();
        let vp0 = crate::potential::total_potential(&positions, tree, params)?;
        let mut schedule_margin = f64::INFINITY;
        for i in 0..n {
            let k = super::gain_k(i, &positions, tree, gains, params, &bounds[i])?;
            let lambdas = super::lambda_sum(i, &positions, tree, gains, params, &bounds[i])?;
            let residual = gains.residual_gain(i, k, lambdas) - 0.5 * gains.rho * bounds[i].lambda_max;
            schedule_margin = schedule_margin.min(residual);
        }
        Ok(Self {
            q_condition: q_condition(r, eps, n, q),
            p_bound_headroom,
            p_bound_decay,
            p_headroom_margin: p - p_bound_headroom,
            p_decay_margin: p - p_bound_decay,
            min_damping_residual,
            delta_recomputed,
            delta_mismatch: (gains.delta - delta_recomputed).abs(),
            psi_max_margin: params.psi_max - vp0 - gains.delta,
            schedule_margin,
        })
    }
}

/// `ρ (r² + Q) / (4 λ_L) · max_i (B_i + σ D_i) / (σ B_i)`.
fn decay_bound(tree: &TreeNetwork, gains: &GainDesign, q: f64, r: f64) -> f64 {
    let worst = (0..tree.n_vertices()).map(|i| gains.weight(i) / (gains.sigma * gains.b[i])).fold(0.0, f64::max);
    gains.rho * (r * r + q) / (4.0 * tree.algebraic_connectivity()) * worst
}

/// `Δ = ½ Σ λ_i2 / (B_i + σ D_i) ‖s_i(0)‖² + f̄² / (4 ρ Γ)`.
fn headroom(
    tree: &TreeNetwork,
    bounds: &[ModelBounds],
    initial: &[RobotState],
    gains: &GainDesign,
    params: &PotentialParams,
) -> Result<f64> {
    let positions: Vec<Vec2> = initial.iter().map(|s| s.x).collect();
    let mut kinetic = 0.0;
    for i in 0..tree.n_vertices() {
        let s = initial[i].v + theta(i, &positions, tree, params)? * gains.sigma;
        kinetic += bounds[i].lambda_max / gains.weight(i) * s.norm_squared();
    }
    Ok(0.5 * kinetic + gains.chi(gains.f_bar))
}

pub fn design_gains(problem: &DesignProblem<'_>) -> Result<DesignOutcome> {
    let DesignProblem { tree, bounds, initial, r, epsilon, f_bar, heuristics } = problem;
    let (r, epsilon, f_bar) = (*r, *epsilon, *f_bar);
    let n = tree.n_vertices();
    heuristics.validate()?;
    if bounds.len() != n || initial.len() != n {
        return Err(Error::Schema(format!(
            "expected {n} robot models and initial states, got {} and {}",
            bounds.len(),
            initial.len()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::DesignInfeasible(format!("communication radius r = {r} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon < r) {
        return Err(Error::DesignInfeasible(format!(
            "initial margin requires 0 < epsilon < r, got epsilon = {epsilon}, r = {r}"
        )));
    }
    if !(f_bar >= 0.0 && f_bar.is_finite()) {
        return Err(Error::DesignInfeasible(format!("force bound f_bar = {f_bar} must be non-negative")));
    }
    for e in tree.edges() {
        let length = (initial[e.tail].x - initial[e.head].x).norm();
        if !(length < r - epsilon) {
            let (i, j) = e.labels();
            return Err(Error::DesignInfeasible(format!(
                "initial edge ({i}, {j}) has length {length} >= r - epsilon = {}",
                r - epsilon
            )));
        }
    }

    let q = select_q(r, epsilon, n);
    let positions: Vec<Vec2> = initial.iter().map(|s| s.x).collect();
    let mut sigma = heuristics.sigma;
    let mut rounds = 0;
    let mut sigma_halvings = 0;
    let mut last_failure = String::new();

    while rounds < MAX_DESIGN_ROUNDS {
        let eta = vec![heuristics.eta; n];
        let gamma = vec![heuristics.gamma; n];
        let zeta = vec![heuristics.zeta; n];
        let d: Vec<f64> = (0..n).map(|i| damping_requirement(sigma, &eta, &gamma, &zeta, tree, i)).collect();
        let mut gains = GainDesign {
            rho: heuristics.rho,
            sigma,
            eta,
            gamma,
            zeta,
            big_gamma: heuristics.big_gamma,
            b: vec![heuristics.b; n],
            d,
            delta: 0.0,
            f_bar,
        };
        let p_decay = decay_bound(tree, &gains, q, r);

        // θ is linear in P; evaluate the unit-P direction once.
        let unit = PotentialParams::new(1.0, q, r, epsilon)?;
        let unit_theta = (0..n).map(|i| theta(i, &positions, tree, &unit)).collect::<Result<Vec<_>>>()?;
        let delta_at = |p: f64, g: &GainDesign| -> f64 {
            let kinetic: f64 = (0..n)
                .map(|i| {
                    let s = initial[i].v + unit_theta[i] * (p * g.sigma);
                    bounds[i].lambda_max / g.weight(i) * s.norm_squared()
                })
                .sum();
            0.5 * kinetic + g.chi(f_bar)
        };

        let mut p = select_p(r, epsilon, n, q, delta_at(0.0, &gains), p_decay);
        let mut converged = None;
        for _ in 0..ROUNDS_PER_ATTEMPT {
            if rounds >= MAX_DESIGN_ROUNDS {
                break;
            }
            rounds += 1;
            let delta = delta_at(p, &gains);
            let next = select_p(r, epsilon, n, q, delta, p_decay);
            if !next.is_finite() || next > P_DIVERGENCE {
                last_failure = format!("P diverged past {P_DIVERGENCE:e} at sigma = {sigma}");
                break;
            }
            if (next - p).abs() <= FIXED_POINT_RTOL * p {
                let delta = delta_at(next, &gains);
                if next > eq4_p_bound(r, epsilon, n, q, delta) && next >= p_decay {
                    converged = Some((next, delta));
                    break;
                }
            }
            p = next;
        }

        if let Some((p, _)) = converged {
            let params = PotentialParams::new(p, q, r, epsilon)?;
            // Recompute Δ through the full-P path so the stored value is exact.
            gains.delta = headroom(tree, bounds, initial, &gains, &params)?;
            let conditions = DesignConditions::evaluate(tree, bounds, initial, &gains, &params)?;
            if conditions.all_hold() {
                return Ok(DesignOutcome { gains, params, rounds, sigma_halvings, conditions });
            }
            last_failure = format!("conditions failed after convergence: {:?}", conditions.failures());
        } else if last_failure.is_empty() {
            last_failure = format!(
                "P > headroom bound(Delta(P)) found no fixed point within {ROUNDS_PER_ATTEMPT} rounds at sigma = {sigma}"
            );
        }
        log::debug!("design attempt with sigma = {sigma} failed: {last_failure}");
        sigma *= 0.5;
        sigma_halvings += 1;
    }
    Err(Error::DesignInfeasible(format!(
        "no design after {MAX_DESIGN_ROUNDS} rounds; blocking inequality: {last_failure}"
    )))
}
