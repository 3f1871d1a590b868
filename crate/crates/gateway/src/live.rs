//! A live trial: the tick loop paced in wall time, driven by a real human
//! through the gateway.

use std::sync::Arc;
use std::time::Duration;

use arn_core::mediator::Frame;
use arn_core::scenario::Scenario;
use arn_core::sim::{LiveHuman, LiveInput, LiveInputs, Trace, Trial, TrialResult, DT};
use tokio::sync::watch;
use tokio::time::MissedTickBehavior;

use crate::protocol::{HelloPayload, Inbound};

/// State shared between the tick loop and client connections: the latest
/// frame (a watch cell, so lagging clients only ever see the newest), the
/// number of connected clients, and the FIFO input queue.
#[derive(Debug, Clone)]
pub struct LiveHandle {
    scenario: Arc<Scenario>,
    pub(crate) frames: watch::Sender<Option<Frame>>,
    pub(crate) clients: watch::Sender<usize>,
    inputs: LiveInputs,
}

impl LiveHandle {
    pub fn hello(&self) -> HelloPayload {
        HelloPayload::new(&self.scenario, self.clock())
    }

    /// Clock of the latest frame.
    pub fn clock(&self) -> f64 {
        self.frames.borrow().as_ref().map_or(0.0, |f| f.tick)
    }

    pub fn latest_frame(&self) -> Option<Frame> {
        self.frames.borrow().clone()
    }

    pub fn subscribe(&self) -> watch::Receiver<Option<Frame>> {
        self.frames.subscribe()
    }

    pub fn client_count(&self) -> usize {
        *self.clients.borrow()
    }

    /// Queues a client input for the next tick. Unknown doors are rejected.
    pub fn submit(&self, input: Inbound) -> Result<(), String> {
        let input = match input {
            Inbound::Feedback(kind) => LiveInput::Feedback(kind),
            Inbound::DoorCommand(id) => match self.scenario.world.door_idx(&id) {
                Some(d) => LiveInput::OpenDoor(d),
                None => return Err(format!("unknown door `{id}`")),
            },
        };
        self.inputs.push(input);
        Ok(())
    }
}

pub struct LiveSession {
    trial: Trial,
    handle: LiveHandle,
    period: Duration,
}

impl LiveSession {
    /// `speed` is simulated seconds per wall-clock second.
    pub fn new(scenario: Scenario, seed: u64, feedback_enabled: bool, speed: f64) -> Self {
        assert!(speed > 0.0, "speed must be positive");
        let inputs = LiveInputs::default();
        let trial = Trial::new(&scenario, seed, feedback_enabled, Box::new(LiveHuman::new(inputs.clone())));
        let handle = LiveHandle {
            scenario: Arc::new(scenario),
            frames: watch::Sender::new(None),
            clients: watch::Sender::new(0),
            inputs,
        };
        LiveSession {
            trial,
            handle,
            period: Duration::from_secs_f64(DT / speed),
        }
    }

    pub fn handle(&self) -> LiveHandle {
        self.handle.clone()
    }

    /// Ticks until the trial ends, publishing every frame. The clock stands
    /// still while no client is connected.
    pub async fn run(mut self) -> (TrialResult, Trace) {
        let mut clients = self.handle.clients.subscribe();
        let mut interval = tokio::time::interval(self.period);
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        while !self.trial.is_finished() {
            while *clients.borrow_and_update() == 0 {
                if clients.changed().await.is_err() {
                    return self.trial.finish();
                }
                interval.reset();
            }
            interval.tick().await;
            if let Some(frame) = self.trial.tick() {
                self.handle.frames.send_replace(Some(frame));
            }
        }
        self.trial.finish()
    }
}
