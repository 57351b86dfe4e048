//! The integration loop: owns the simulation, paces it against the wall
//! clock and publishes frames.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::Utf8Bytes;
use swarmlink::potential::PotentialParams;
use swarmlink::simulator::{clamp_norm, ForceMailbox, Simulation};
use swarmlink::{Error, Vec2};
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::protocol::{ControlAction, FrameHeader, RunState, ServerMessage, SessionStatus, StateFrame};

/// Steps integrated per loop iteration before the loop gives up on real time.
const MAX_CATCH_UP: u64 = 250;
const IDLE_SLEEP: Duration = Duration::from_millis(1);

pub(crate) type ControlRequest = (ControlAction, oneshot::Sender<SessionStatus>);

pub(crate) struct Session {
    sim: Simulation,
    mailbox: ForceMailbox,
    frames: broadcast::Sender<Utf8Bytes>,
    state: RunState,
    epoch: u64,
    frame: u64,
    anchor: Instant,
    anchor_step: u64,
    period: Duration,
}

impl Session {
    pub(crate) fn new(
        sim: Simulation,
        mailbox: ForceMailbox,
        frames: broadcast::Sender<Utf8Bytes>,
        rate_hz: f64,
    ) -> Self {
        Self {
            sim,
            mailbox,
            frames,
            state: RunState::Running,
            epoch: 0,
            frame: 0,
            anchor: Instant::now(),
            anchor_step: 0,
            period: Duration::from_secs_f64(1.0 / rate_hz),
        }
    }

    fn params(&self) -> &PotentialParams {
        &self.sim.design().params
    }

    fn status(&self) -> SessionStatus {
        SessionStatus { state: self.state, epoch: self.epoch, t: self.sim.time() }
    }

    fn reanchor(&mut self) {
        self.anchor = Instant::now();
        self.anchor_step = self.sim.step_index();
    }

    fn commanded_force(&self) -> Vec2 {
        clamp_norm(self.mailbox.snapshot(), self.sim.scenario().file.f_bar)
    }

    fn apply(&mut self, action: ControlAction) -> SessionStatus {
        match action {
            ControlAction::Pause => {
                if self.state == RunState::Running {
                    self.state = RunState::Paused;
                }
            }
            ControlAction::Resume => {
                if self.state == RunState::Paused {
                    self.state = RunState::Running;
                    self.reanchor();
                }
            }
            ControlAction::Reset => match self.sim.reset() {
                Ok(()) => {
                    self.mailbox.post(Vec2::zeros());
                    self.epoch += 1;
                    if self.state != RunState::Paused {
                        self.state = RunState::Running;
                    }
                    self.reanchor();
                }
                Err(e) => log::error!("reset failed: {e}"),
            },
        }
        log::info!("{action:?}: now {:?} (epoch {})", self.state, self.epoch);
        self.status()
    }

    fn integrate(&mut self) {
        let dt = self.sim.scenario().dt();
        let due = self.anchor_step + (self.anchor.elapsed().as_secs_f64() / dt) as u64;
        let mut steps = 0;
        while self.sim.step_index() < due {
            if steps == MAX_CATCH_UP {
                log::warn!("integration is slower than real time; dropping {} steps", due - self.sim.step_index());
                self.reanchor();
                return;
            }
            match self.sim.advance_live(self.mailbox.snapshot()) {
                Ok(_) => steps += 1,
                Err(Error::LinkBroken { t, i, j }) => {
                    log::warn!("link ({i}, {j}) broke at t = {t:.4} s; integration stopped until reset");
                    self.state = RunState::LinkBroken;
                    return;
                }
                Err(e) => {
                    log::error!("integration failed: {e}; integration stopped until reset");
                    self.state = RunState::LinkBroken;
                    return;
                }
            }
        }
    }

    fn publish(&mut self) {
        let force = self.commanded_force();
        let sample = match self.sim.sample(force) {
            Ok(s) => s,
            Err(e) => {
                log::error!("cannot sample the current state: {e}");
                return;
            }
        };
        let header =
            FrameHeader { frame: self.frame, epoch: self.epoch, step: self.sim.step_index(), state: self.state };
        let params = *self.params();
        let frame = match StateFrame::from_sample(&sample, self.sim.scenario(), |d2| params.stress_ratio(d2), header) {
            Ok(f) => f,
            Err(e) => {
                log::error!("cannot build frame: {e}");
                return;
            }
        };
        self.frame += 1;
        match serde_json::to_string(&ServerMessage::Frame(frame)) {
            // An error only means nobody is subscribed.
            Ok(text) => {
                let _ = self.frames.send(text.into());
            }
            Err(e) => log::error!("cannot encode frame: {e}"),
        }
    }

    /// Runs until `stop` is raised or every control sender is gone.
    pub(crate) fn run(mut self, mut controls: mpsc::UnboundedReceiver<ControlRequest>, stop: Arc<AtomicBool>) {
        let mut next_frame = Instant::now();
        self.reanchor();
        while !stop.load(Ordering::Relaxed) {
            loop {
                match controls.try_recv() {
                    Ok((action, reply)) => {
                        let status = self.apply(action);
                        let _ = reply.send(status);
                    }
                    Err(mpsc::error::TryRecvError::Empty) => break,
                    Err(mpsc::error::TryRecvError::Disconnected) => return,
                }
            }
            if self.state == RunState::Running {
                self.integrate();
            }
            let now = Instant::now();
            if now >= next_frame {
                self.publish();
                next_frame += self.period;
                if next_frame < now {
                    next_frame = now + self.period;
                }
            }
            std::thread::sleep(next_frame.saturating_duration_since(Instant::now()).min(IDLE_SLEEP));
        }
    }
}
