//! Fixed-step closed-loop integration.
//!
//! Each robot obeys `M_i(x_i) ẍ_i + C_i(x_i, ẋ_i) ẋ_i = u_i (+ f for robot 1)`.
//! The state is advanced with classical RK4; controls and gains are
//! re-evaluated at every stage because `K_i` depends on the link lengths.

mod scenario;
mod trace;

pub use scenario::{
    ForceProfile, NegativeControl, RobotSpec, Scenario, ScenarioFile, DEFAULT_DT, RANDOM_HOLD, SCHEMA_VERSION,
};
pub use trace::{columns, RunOutcome, Sample, SimTrace, TraceMeta, TRACE_CSV, TRACE_META, TRACE_SCHEMA_VERSION};

use std::sync::{Arc, Mutex};

use crate::controller::{Controller, DesignOutcome};
use crate::dynamics::{ModelBounds, RobotModel, RobotState};
use crate::error::{Error, Result};
use crate::potential::total_potential;
use crate::verifier::lyapunov_v;
use crate::Vec2;

/// One classical Runge-Kutta step of `ẋ = v, v̇ = accel(t, state)`.
pub fn rk4_step<F>(states: &[RobotState], t: f64, dt: f64, mut accel: F) -> Result<Vec<RobotState>>
where
    F: FnMut(f64, &[RobotState]) -> Result<Vec<Vec2>>,
{
    let offset = |base: &[RobotState], dx: &[Vec2], dv: &[Vec2], h: f64| -> Vec<RobotState> {
        base.iter().zip(dx.iter().zip(dv)).map(|(s, (dx, dv))| RobotState::new(s.x + dx * h, s.v + dv * h)).collect()
    };
    let v1: Vec<Vec2> = states.iter().map(|s| s.v).collect();
    let a1 = accel(t, states)?;
    let s2 = offset(states, &v1, &a1, 0.5 * dt);
    let v2: Vec<Vec2> = s2.iter().map(|s| s.v).collect();
    let a2 = accel(t + 0.5 * dt, &s2)?;
    let s3 = offset(states, &v2, &a2, 0.5 * dt);
    let v3: Vec<Vec2> = s3.iter().map(|s| s.v).collect();
    let a3 = accel(t + 0.5 * dt, &s3)?;
    let s4 = offset(states, &v3, &a3, dt);
    let v4: Vec<Vec2> = s4.iter().map(|s| s.v).collect();
    let a4 = accel(t + dt, &s4)?;
    Ok(states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            RobotState::new(
                s.x + (v1[i] + v2[i] * 2.0 + v3[i] * 2.0 + v4[i]) * (dt / 6.0),
                s.v + (a1[i] + a2[i] * 2.0 + a3[i] * 2.0 + a4[i]) * (dt / 6.0),
            )
        })
        .collect())
}

/// Plant models together with the controller.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub models: Vec<RobotModel>,
    pub controller: Controller,
}

impl ClosedLoop {
    fn split(states: &[RobotState]) -> (Vec<Vec2>, Vec<Vec2>) {
        states.iter().map(|s| (s.x, s.v)).unzip()
    }

    fn check_links(&self, t: f64, positions: &[Vec2]) -> Result<()> {
        match self.controller.tree.first_long_edge(positions, self.controller.params.r) {
            Some((e, _)) => {
                let (i, j) = e.labels();
                Err(Error::LinkBroken { t, i, j })
            }
            None => Ok(()),
        }
    }

    /// Accelerations of every robot with `force` applied to robot 1.
    pub fn accelerations(&self, t: f64, states: &[RobotState], force: Vec2) -> Result<Vec<Vec2>> {
        let (positions, velocities) = Self::split(states);
        self.check_links(t, &positions)?;
        states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut u = self.controller.control(i, &positions, &velocities)?.u;
                if i == 0 {
                    u += force;
                }
                self.models[i].accel(s, &u)
            })
            .collect()
    }

    pub fn step<F: Fn(f64) -> Vec2>(
        &self,
        states: &[RobotState],
        t: f64,
        dt: f64,
        force: F,
    ) -> Result<Vec<RobotState>> {
        let next = rk4_step(states, t, dt, |tau, s| self.accelerations(tau, s, force(tau)))?;
        let (positions, _) = Self::split(&next);
        self.check_links(t + dt, &positions)?;
        Ok(next)
    }

    /// Everything logged for one instant.
    pub fn sample(&self, t: f64, states: &[RobotState], force: Vec2) -> Result<Sample> {
        let (positions, velocities) = Self::split(states);
        self.check_links(t, &positions)?;
        let c = &self.controller;
        let outputs = c.control_all(&positions, &velocities)?;
        Ok(Sample {
            t,
            states: states.to_vec(),
            controls: outputs.iter().map(|o| o.u).collect(),
            gains: outputs.iter().map(|o| o.k).collect(),
            force,
            edge_distances: c.tree.edges().iter().map(|e| (positions[e.tail] - positions[e.head]).norm()).collect(),
            potential: total_potential(&positions, &c.tree, &c.params)?,
            lyapunov: lyapunov_v(states, &c.tree, &c.design, &c.params, &self.models)?,
        })
    }
}

/// Stability limit of classical RK4 on the negative real axis.
pub const RK4_REAL_AXIS_LIMIT: f64 = 2.785;

/// Latest operator command, written by the session layer and read once per step.
#[derive(Debug, Clone, Default)]
pub struct ForceMailbox(Arc<Mutex<Vec2>>);

impl ForceMailbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn post(&self, force: Vec2) {
        *self.0.lock().unwrap_or_else(|e| e.into_inner()) = force;
    }

    pub fn snapshot(&self) -> Vec2 {
        *self.0.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// A running simulation that can be stepped, paused by its owner, and reset.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    bounds: Vec<ModelBounds>,
    outcome: DesignOutcome,
    closed_loop: ClosedLoop,
    states: Vec<RobotState>,
    step_index: u64,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let bounds = scenario.bounds();
        let outcome = scenario.design_with(&bounds)?;
        Self::with_design(scenario, bounds, outcome)
    }

    pub fn with_design(scenario: Scenario, bounds: Vec<ModelBounds>, outcome: DesignOutcome) -> Result<Self> {
        let mut controller =
            Controller::new(scenario.tree.clone(), outcome.params, outcome.gains.clone(), bounds.clone());
        let states = scenario.initial.clone();
        if scenario.freeze_gains() {
            let positions: Vec<Vec2> = states.iter().map(|s| s.x).collect();
            controller.freeze_gains(&positions)?;
        }
        let closed_loop = ClosedLoop { models: scenario.models.clone(), controller };
        let sim = Self { scenario, bounds, outcome, closed_loop, states, step_index: 0 };
        let stiffness = sim.step_stiffness()?;
        if stiffness > RK4_REAL_AXIS_LIMIT {
            log::warn!(
                "dt = {} is too coarse for the designed gains (dt * (K + D) / lambda1 = {stiffness:.2}); \
                 the integration is likely to go unstable",
                sim.scenario.dt()
            );
        }
        Ok(sim)
    }

    /// `dt · max_i (K_i + D_i) / λ_i,min` at the current state: the damping
    /// rate of the fastest robot in units of the step. Classical RK4 stays
    /// stable below about 2.78 on the negative real axis.
    pub fn step_stiffness(&self) -> Result<f64> {
        let positions: Vec<Vec2> = self.states.iter().map(|s| s.x).collect();
        let velocities: Vec<Vec2> = self.states.iter().map(|s| s.v).collect();
        let outputs = self.closed_loop.controller.control_all(&positions, &velocities)?;
        let d = &self.outcome.gains.d;
        let rate =
            outputs.iter().zip(d).zip(&self.bounds).map(|((o, d), b)| (o.k + d) / b.lambda_min).fold(0.0, f64::max);
        Ok(rate * self.scenario.dt())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn design(&self) -> &DesignOutcome {
        &self.outcome
    }

    pub fn bounds(&self) -> &[ModelBounds] {
        &self.bounds
    }

    pub fn closed_loop(&self) -> &ClosedLoop {
        &self.closed_loop
    }

    pub fn states(&self) -> &[RobotState] {
        &self.states
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.scenario.dt()
    }

    /// Logs the current instant under the given force.
    pub fn sample(&self, force: Vec2) -> Result<Sample> {
        self.closed_loop.sample(self.time(), &self.states, force)
    }

    /// Advances one step under the scripted profile.
    pub fn advance_scripted(&mut self) -> Result<()> {
        let scenario = &self.scenario;
        let next = self.closed_loop.step(&self.states, self.time(), scenario.dt(), |t| scenario.force_at(t))?;
        self.commit(next);
        Ok(())
    }

    /// Advances one step holding `force` (clamped to `f_bar`) constant.
    pub fn advance_live(&mut self, force: Vec2) -> Result<Vec2> {
        let force = clamp_norm(force, self.scenario.file.f_bar);
        let next = self.closed_loop.step(&self.states, self.time(), self.scenario.dt(), |_| force)?;
        self.commit(next);
        Ok(force)
    }

    fn commit(&mut self, next: Vec<RobotState>) {
        self.states = next;
        self.step_index += 1;
    }

    /// Restores the initial state and re-runs the design.
    pub fn reset(&mut self) -> Result<()> {
        *self = Self::new(self.scenario.clone())?;
        Ok(())
    }
}

/// Scales `f` down to norm `limit` if it is longer.
pub fn clamp_norm(f: Vec2, limit: f64) -> Vec2 {
    let n = f.norm();
    if !n.is_finite() {
        return Vec2::zeros();
    }
    if n > limit {
        f * (limit / n)
    } else {
        f
    }
}

/// Designs gains and integrates the scenario over its full duration.
pub fn run(scenario: &Scenario) -> Result<SimTrace> {
    run_with(Simulation::new(scenario.clone())?)
}

/// Integrates a prepared simulation from its current state.
pub fn run_with(mut sim: Simulation) -> Result<SimTrace> {
    if sim.scenario.file.force.is_live() {
        return Err(Error::Schema("the external_live profile needs a live session".into()));
    }
    let n_steps = sim.scenario.n_steps();
    let mut trace = SimTrace::new(&sim.scenario, sim.outcome.clone(), sim.bounds.clone());
    loop {
        let force = sim.scenario.force_at(sim.time());
        match sim.sample(force) {
            Ok(s) => trace.push(s),
            Err(Error::LinkBroken { t, i, j }) => {
                trace.meta.outcome = RunOutcome::LinkBroken { t, i, j };
                break;
            }
            Err(e) => return Err(e),
        }
        if sim.step_index as usize >= n_steps {
            break;
        }
        match sim.advance_scripted() {
            Ok(()) => {}
            Err(Error::LinkBroken { t, i, j }) => {
                log::warn!("link ({i}, {j}) broke at t = {t:.4} s");
                trace.meta.outcome = RunOutcome::LinkBroken { t, i, j };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}
