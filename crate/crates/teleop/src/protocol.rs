//! JSON messages exchanged over `/ws`.

use serde::{Deserialize, Serialize};
use swarmlink::dynamics::RobotModel;
use swarmlink::simulator::{Sample, Scenario};
use swarmlink::Result;

/// Message sent by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Force(ForceCommand),
    Control { action: ControlAction },
}

/// Requested force on the informed robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceCommand {
    pub fx: f64,
    pub fy: f64,
    /// Per-client sequence number; a command not newer than the last one
    /// accepted from the same client is ignored.
    pub seq: u64,
    /// Assigned by the server from the connection.
    #[serde(skip)]
    pub client: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Pause,
    Resume,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Running,
    Paused,
    /// Integration stopped because a link reached `r`; only `reset` leaves this state.
    LinkBroken,
}

/// Message sent by the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        client: u64,
        rate_hz: f64,
        scenario: ScenarioSummary,
    },
    Frame(StateFrame),
    Ack {
        seq: u64,
        accepted: bool,
        /// Force in effect after the command, clamped to `f_bar`.
        fx: f64,
        fy: f64,
    },
    Status(SessionStatus),
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub state: RunState,
    pub epoch: u64,
    pub t: f64,
}

/// What `GET /scenario` and `hello` report about the running session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub scenario_hash: String,
    pub n_robots: usize,
    /// One-based robot labels.
    pub edges: Vec<[usize; 2]>,
    pub models: Vec<RobotModel>,
    pub initial_positions: Vec<[f64; 2]>,
    pub r: f64,
    pub epsilon: f64,
    pub f_bar: f64,
    pub dt: f64,
    pub p: f64,
    pub q: f64,
    pub psi_max: f64,
}

impl ScenarioSummary {
    pub fn new(scenario: &Scenario, p: f64, q: f64, psi_max: f64) -> Self {
        let file = &scenario.file;
        Self {
            name: file.name.clone(),
            scenario_hash: scenario.hash(),
            n_robots: scenario.n_robots(),
            edges: file.edges.clone(),
            models: scenario.models.clone(),
            initial_positions: scenario.initial.iter().map(|s| [s.x.x, s.x.y]).collect(),
            r: file.r,
            epsilon: file.epsilon,
            f_bar: file.f_bar,
            dt: scenario.dt(),
            p,
            q,
            psi_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotFrame {
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub u: [f64; 2],
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrame {
    pub i: usize,
    pub j: usize,
    pub d: f64,
    /// `ψ(d) / ψ_max`, below 1 while the link holds.
    pub stress: f64,
}

/// Snapshot of the swarm at one integration step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    /// Strictly increasing over the life of the service.
    pub frame: u64,
    /// Incremented by every reset; `t` and `step` restart with it.
    pub epoch: u64,
    pub step: u64,
    pub state: RunState,
    pub t: f64,
    pub robots: Vec<RobotFrame>,
    pub edges: Vec<EdgeFrame>,
    pub f: [f64; 2],
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "Vp")]
    pub vp: f64,
}

impl StateFrame {
    pub(crate) fn from_sample(
        sample: &Sample,
        scenario: &Scenario,
        psi_max_ratio: impl Fn(f64) -> Result<f64>,
        header: FrameHeader,
    ) -> Result<Self> {
        let robots = sample
            .states
            .iter()
            .zip(&sample.controls)
            .zip(&sample.gains)
            .map(|((s, u), k)| RobotFrame { x: [s.x.x, s.x.y], v: [s.v.x, s.v.y], u: [u.x, u.y], k: *k })
            .collect();
        let edges = scenario
            .tree
            .edges()
            .iter()
            .zip(&sample.edge_distances)
            .map(|(e, d)| {
                let (i, j) = e.labels();
                Ok(EdgeFrame { i, j, d: *d, stress: psi_max_ratio(d * d)? })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            frame: header.frame,
            epoch: header.epoch,
            step: header.step,
            state: header.state,
            t: sample.t,
            robots,
            edges,
            f: [sample.force.x, sample.force.y],
            v: sample.lyapunov,
            vp: sample.potential,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameHeader {
    pub frame: u64,
    pub epoch: u64,
    pub step: u64,
    pub state: RunState,
}
