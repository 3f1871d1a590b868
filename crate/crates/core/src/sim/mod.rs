//! Fixed-step trial execution: robots carry out the mediator's commands, the
//! human (simulated or live) opens doors and issues feedback, and everything
//! that happens is written to a trace.

pub mod batch;
pub mod metrics;
pub mod trace;

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::constraints::TIME_EPS;
use crate::domain::{DoorState, ObjectLocation, RobotSpec, RobotState, RobotStatus, TaskSpec, WorldMap};
use crate::human::{
    init_human, step_human, DoorCheck, FeedbackEvent, FeedbackKind, HumanAction, HumanError,
    HumanParams, HumanState,
};
use crate::mediator::{Command, Exec, Frame, Inbox, Mediator, Snapshot};
use crate::motion::Trajectory;
use crate::planner::{Action, ActionKind, Target, TURN_S};
use crate::rng::{stream, StreamRng, DOOR, HUMAN, TIE_BREAK};
use crate::scenario::Scenario;

pub use batch::{run_batch, run_batch_configs, run_batch_traced, BatchResult, ConfigSummary, MetricSummary};
pub use metrics::{compute_metrics, config_name, MetricsError, TrialResult, WITHOUT_FEEDBACK, WITH_FEEDBACK};
pub use trace::{Event, Record, Trace};

/// Simulation step in seconds.
pub const DT: f64 = 0.5;
/// Trials still running at this sim time are aborted.
pub const T_MAX: f64 = 3600.0;

/// What the human did during one tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanTick {
    pub started: Option<HumanAction>,
    pub feedback: Vec<FeedbackEvent>,
    /// Doors opened during the tick.
    pub opened: Vec<usize>,
    pub checks: Vec<DoorCheck>,
}

/// Source of human behaviour for a trial.
pub trait HumanDriver: Send {
    /// Advances through `[clock, clock + dt)`; `waiting[d]` robots are waiting at door `d`.
    fn step(&mut self, waiting: &[usize], clock: f64, dt: f64) -> HumanTick;
    /// Human completion time once the human's own work is finished.
    fn finished_at(&self) -> Option<f64>;
}

/// The scripted virtual human.
#[derive(Debug, Clone)]
pub struct SimulatedHuman {
    pub state: HumanState,
    params: HumanParams,
    human_rng: StreamRng,
    door_rng: StreamRng,
    tie_rng: StreamRng,
}

impl SimulatedHuman {
    pub fn new(params: &HumanParams, feedback: bool, seed: u64) -> Result<Self, HumanError> {
        let mut human_rng = stream(seed, HUMAN);
        let state = init_human(params, feedback, &mut human_rng)?;
        Ok(SimulatedHuman {
            state,
            params: params.clone(),
            human_rng,
            door_rng: stream(seed, DOOR),
            tie_rng: stream(seed, TIE_BREAK),
        })
    }
}

impl HumanDriver for SimulatedHuman {
    fn step(&mut self, waiting: &[usize], clock: f64, dt: f64) -> HumanTick {
        let s = step_human(
            &mut self.state,
            &self.params,
            waiting,
            clock,
            dt,
            &mut self.door_rng,
            &mut self.human_rng,
            &mut self.tie_rng,
        );
        HumanTick {
            started: s.started,
            feedback: s.feedback.into_iter().collect(),
            opened: s.opened,
            checks: s.checks,
        }
    }

    fn finished_at(&self) -> Option<f64> {
        self.state.finished_at
    }
}

/// A human who never acts and has no work of their own.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullHuman;

impl HumanDriver for NullHuman {
    fn step(&mut self, _: &[usize], _: f64, _: f64) -> HumanTick {
        HumanTick::default()
    }

    fn finished_at(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Input from a real human, typically arriving over the gateway.
#[derive(Debug, Clone, PartialEq)]
pub enum LiveInput {
    Feedback(FeedbackKind),
    OpenDoor(usize),
}

/// FIFO queue shared between the gateway and a live trial.
#[derive(Debug, Clone, Default)]
pub struct LiveInputs {
    queue: Arc<Mutex<VecDeque<LiveInput>>>,
}

impl LiveInputs {
    pub fn push(&self, input: LiveInput) {
        self.queue.lock().expect("live input lock").push_back(input);
    }

    fn drain(&self) -> Vec<LiveInput> {
        self.queue.lock().expect("live input lock").drain(..).collect()
    }
}

/// A real human: feedback and door openings take effect at the tick they are
/// received, stamped with the simulation clock. There is no own task.
#[derive(Debug, Clone, Default)]
pub struct LiveHuman {
    inputs: LiveInputs,
}

impl LiveHuman {
    pub fn new(inputs: LiveInputs) -> Self {
        LiveHuman { inputs }
    }
}

impl HumanDriver for LiveHuman {
    fn step(&mut self, _: &[usize], clock: f64, _: f64) -> HumanTick {
        let mut tick = HumanTick::default();
        for input in self.inputs.drain() {
            match input {
                LiveInput::Feedback(kind) => tick.feedback.push(FeedbackEvent { kind, issued_at: clock }),
                LiveInput::OpenDoor(d) => tick.opened.push(d),
            }
        }
        tick
    }

    fn finished_at(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("invalid human parameters: {0}")]
    Human(#[from] HumanError),
}

#[derive(Debug, Clone)]
struct Running {
    action: Action,
    trajectory: Trajectory,
    /// Arc length covered.
    progress: f64,
    /// Turn still to do after arriving at a door.
    turn_left: f64,
    /// Remaining time of a stationary timed action.
    timer: f64,
}

impl Running {
    fn remaining(&self, speed: f64) -> f64 {
        match self.action.kind {
            ActionKind::Approach { .. } | ActionKind::GoThrough { .. } => {
                (self.trajectory.length() - self.progress) / speed + self.turn_left
            }
            ActionKind::OpenDoor { assisted: true, .. } => self.action.duration,
            _ => self.timer,
        }
    }
}

/// A trial in progress.
pub struct Trial {
    world: Arc<WorldMap>,
    specs: Vec<RobotSpec>,
    tasks: Vec<TaskSpec>,
    robots: Vec<RobotState>,
    running: Vec<Option<Running>>,
    /// Action finished during the previous tick, not yet acknowledged by the mediator.
    completed: Vec<bool>,
    objects: BTreeMap<String, ObjectLocation>,
    doors: BTreeMap<String, DoorState>,
    door_opened_at: Vec<Option<f64>>,
    mediator: Mediator,
    inbox: Inbox,
    human: Box<dyn HumanDriver>,
    feedback_enabled: bool,
    clock: f64,
    goal_at: Vec<Option<f64>>,
    human_done: bool,
    trace: Trace,
    ended: bool,
    frames: u64,
}

impl Trial {
    pub fn new(
        scenario: &Scenario,
        seed: u64,
        feedback_enabled: bool,
        human: Box<dyn HumanDriver>,
    ) -> Self {
        let world = Arc::new(scenario.world.clone());
        let robots: Vec<RobotState> = scenario.robots.iter().map(|r| RobotState::at_start(r, &world)).collect();
        let objects = scenario.initial_objects();
        let doors = world.initial_door_states();
        let door_opened_at = world
            .doors()
            .iter()
            .map(|d| (d.state == DoorState::Open).then_some(0.0))
            .collect();
        let mut mediator = Mediator::with_plans(
            world.clone(),
            scenario.robots.clone(),
            scenario.tasks.clone(),
            &robots,
            vec![Default::default(); robots.len()],
            0.0,
        )
        .expect("scenario has one task per robot");
        let initial = mediator.plan_initial(&robots, &objects, &doors);

        let n = robots.len();
        let mut trial = Trial {
            world,
            specs: scenario.robots.clone(),
            tasks: scenario.tasks.clone(),
            running: vec![None; n],
            completed: vec![false; n],
            robots,
            objects,
            doors,
            door_opened_at,
            mediator,
            inbox: Inbox::new(),
            human,
            feedback_enabled,
            clock: 0.0,
            goal_at: vec![None; n],
            human_done: false,
            trace: Trace::default(),
            ended: false,
            frames: 0,
        };
        trial.trace.push(
            0.0,
            Event::TrialStart {
                scenario: scenario.name.clone(),
                seed,
                feedback: feedback_enabled,
                robots: n,
            },
        );
        match initial {
            Ok(()) => trial.log_plans(false),
            Err(e) => {
                trial.end(true, Some(e.to_string()));
                return trial;
            }
        }
        trial.record_progress(0.0);
        trial.check_end();
        trial
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn is_finished(&self) -> bool {
        self.ended
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn world(&self) -> &WorldMap {
        &self.world
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn doors(&self) -> &BTreeMap<String, DoorState> {
        &self.doors
    }

    pub fn mediator(&self) -> &Mediator {
        &self.mediator
    }

    /// Runs to completion and returns the result with its trace.
    pub fn run(mut self) -> (TrialResult, Trace) {
        while !self.ended {
            self.tick();
        }
        self.finish()
    }

    pub fn finish(self) -> (TrialResult, Trace) {
        let result = compute_metrics(&self.trace).expect("trial trace is well formed");
        (result, self.trace)
    }

    /// One step of `DT`. Returns the frame rendered this tick, or `None` once
    /// the trial has ended.
    pub fn tick(&mut self) -> Option<Frame> {
        if self.ended {
            return None;
        }
        let clock = self.clock;
        let end = clock + DT;

        let exec: Vec<Exec> = (0..self.robots.len())
            .map(|i| match (&self.running[i], self.completed[i]) {
                (_, true) => Exec::Completed,
                (Some(r), false) => Exec::Running {
                    remaining_s: r.remaining(self.specs[i].speed),
                },
                (None, false) => Exec::Idle,
            })
            .collect();
        let out = {
            let snap = Snapshot {
                clock,
                robots: &self.robots,
                exec: &exec,
                objects: &self.objects,
                doors: &self.doors,
            };
            self.mediator.step(&snap, &self.inbox)
        };
        self.frames += 1;
        for i in 0..self.robots.len() {
            if self.completed[i] {
                self.completed[i] = false;
                self.running[i] = None;
            }
        }
        if let Some(fb) = &out.feedback {
            self.trace.push(
                clock,
                Event::FeedbackConsumed {
                    kind: fb.kind,
                    issued_at: fb.issued_at,
                },
            );
        }
        for cmd in out.commands {
            self.apply(cmd, clock);
        }
        if out.replanned {
            let windows = self.mediator.constraints.windows().to_vec();
            self.trace.push(clock, Event::Replan { windows: windows.len() });
            self.trace.push(clock, Event::Constraints { windows });
            self.log_plans(true);
        }
        if let Some(e) = out.abort {
            self.end(true, Some(e.to_string()));
            return Some(out.frame);
        }
        for i in 0..self.robots.len() {
            if self.running[i].is_none() && self.goal_at[i].is_some() {
                self.robots[i].status = RobotStatus::Done;
            }
        }

        let waiting = self.waiting_counts();
        let h = self.human.step(&waiting, clock, DT);
        for c in &h.checks {
            self.trace.push(
                clock,
                Event::DoorCheck {
                    door: self.world.doors()[c.door].id.clone(),
                    waiting: c.waiting,
                    probability: c.probability,
                    successes: c.successes,
                },
            );
        }
        if let Some(a) = h.started {
            self.trace.push(
                clock,
                Event::HumanAction {
                    code: a.kind,
                    duration: a.duration,
                },
            );
        }
        for fb in h.feedback {
            self.trace.push(clock, Event::Feedback { kind: fb.kind });
            if self.feedback_enabled {
                self.inbox.push(fb);
            }
        }
        for d in h.opened {
            if d < self.door_opened_at.len() {
                self.open_door(d, end);
            }
        }

        for i in 0..self.robots.len() {
            if let Err(reason) = self.advance(i, end) {
                self.end_at(end, true, Some(reason));
                return Some(out.frame);
            }
        }
        self.auto_close(end);
        if let Err(reason) = self.conservation() {
            self.end_at(end, true, Some(reason));
            return Some(out.frame);
        }
        self.clock = end;
        self.record_progress(end);
        self.check_end();
        Some(out.frame)
    }

    fn log_plans(&mut self, replan: bool) {
        for i in 0..self.robots.len() {
            let estimate = self.mediator.last_team.finish.get(i).copied().unwrap_or(self.clock);
            self.trace.push(
                self.clock,
                Event::Plan {
                    robot: i,
                    replan,
                    estimate,
                    actions: self.mediator.plans[i].iter().cloned().collect(),
                },
            );
        }
    }

    fn apply(&mut self, cmd: Command, clock: f64) {
        match cmd {
            Command::Start {
                robot,
                action,
                trajectory,
            } => {
                self.trace.push(
                    clock,
                    Event::ActionStart {
                        robot,
                        action: action.to_string(),
                    },
                );
                let (x, y) = trajectory.start();
                let r = &mut self.robots[robot];
                r.pose.x = x;
                r.pose.y = y;
                r.status = match action.kind {
                    ActionKind::Approach { .. } | ActionKind::GoThrough { .. } => RobotStatus::Moving,
                    ActionKind::OpenDoor { assisted: true, .. } => RobotStatus::WaitingAtDoor,
                    _ => RobotStatus::Idle,
                };
                let turn_left = match action.kind {
                    ActionKind::Approach {
                        target: Target::Door(_),
                    } => TURN_S,
                    _ => 0.0,
                };
                self.running[robot] = Some(Running {
                    timer: action.duration,
                    action,
                    trajectory,
                    progress: 0.0,
                    turn_left,
                });
            }
            Command::Abort { robot } => {
                if let Some(r) = self.running[robot].take() {
                    self.trace.push(
                        clock,
                        Event::ActionAbort {
                            robot,
                            action: r.action.to_string(),
                        },
                    );
                }
                self.robots[robot].status = RobotStatus::Idle;
            }
        }
    }

    /// Robots waiting for the human at each door.
    fn waiting_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.world.doors().len()];
        for (i, r) in self.robots.iter().enumerate() {
            if r.status != RobotStatus::WaitingAtDoor {
                continue;
            }
            let door = match self.running[i].as_ref().map(|r| &r.action.kind) {
                Some(ActionKind::OpenDoor { door, .. }) | Some(ActionKind::GoThrough { door }) => door,
                _ => continue,
            };
            if let Some(d) = self.world.door_idx(door) {
                if self.world.doors()[d].assisted {
                    counts[d] += 1;
                }
            }
        }
        counts
    }

    fn door_is_open(&self, door: &str) -> bool {
        self.doors.get(door) == Some(&DoorState::Open)
    }

    fn open_door(&mut self, d: usize, t: f64) {
        let id = self.world.doors()[d].id.clone();
        self.door_opened_at[d] = Some(t);
        if self.doors.insert(id.clone(), DoorState::Open) != Some(DoorState::Open) {
            self.trace.push(t, Event::Door { door: id, state: DoorState::Open });
        }
    }

    /// A door stays open while a robot is about to go, or is going, through it.
    fn held(&self, door: &str) -> bool {
        (0..self.robots.len()).any(|i| {
            let through = |a: &Action| matches!(&a.kind, ActionKind::GoThrough { door: d } if d == door);
            match &self.running[i] {
                Some(r) if self.completed[i] => {
                    matches!(&r.action.kind, ActionKind::OpenDoor { door: d, .. } if d == door)
                }
                Some(r) => through(&r.action),
                None => self.mediator.plans[i].front().is_some_and(through),
            }
        })
    }

    fn auto_close(&mut self, t: f64) {
        for d in 0..self.door_opened_at.len() {
            let Some(opened) = self.door_opened_at[d] else {
                continue;
            };
            let door = &self.world.doors()[d];
            if t + TIME_EPS >= opened + door.auto_close_after && !self.held(&door.id) {
                let id = door.id.clone();
                self.door_opened_at[d] = None;
                self.doors.insert(id.clone(), DoorState::Closed);
                self.trace.push(t, Event::Door { door: id, state: DoorState::Closed });
            }
        }
    }

    /// Executes robot `i`'s current action for one tick ending at `t`.
    fn advance(&mut self, i: usize, t: f64) -> Result<(), String> {
        if self.completed[i] {
            return Ok(());
        }
        let speed = self.specs[i].speed;
        let door_open = match self.running[i].as_ref().map(|r| &r.action.kind) {
            Some(ActionKind::OpenDoor { door, .. }) | Some(ActionKind::GoThrough { door }) => {
                self.door_is_open(door)
            }
            _ => false,
        };
        let Some(run) = self.running[i].as_mut() else {
            return Ok(());
        };
        let robot = &mut self.robots[i];
        let len = run.trajectory.length();
        let done = match &run.action.kind {
            ActionKind::Approach { target } => {
                if run.progress < len {
                    run.progress = (run.progress + speed * DT).min(len);
                    let ((x, y), heading) = run.trajectory.at(run.progress);
                    robot.pose.x = x;
                    robot.pose.y = y;
                    if let Some(h) = heading {
                        robot.pose.heading = h;
                    }
                } else if run.turn_left > TIME_EPS {
                    run.turn_left -= DT;
                    if run.turn_left <= TIME_EPS {
                        run.turn_left = 0.0;
                        if let Target::Door(door) = target {
                            if let Some(h) = door_bearing(&self.world, door, robot.pose.x, robot.pose.y) {
                                robot.pose.heading = h;
                            }
                        }
                    }
                }
                run.progress >= len && run.turn_left <= TIME_EPS
            }
            ActionKind::GoThrough { .. } => {
                if run.progress == 0.0 && !door_open {
                    // the door closed before we got going: wait for it like a request
                    robot.status = RobotStatus::WaitingAtDoor;
                    false
                } else {
                    robot.status = RobotStatus::Moving;
                    run.progress = (run.progress + speed * DT).min(len);
                    let ((x, y), heading) = run.trajectory.at(run.progress);
                    robot.pose.x = x;
                    robot.pose.y = y;
                    if let Some(h) = heading {
                        robot.pose.heading = h;
                    }
                    run.progress >= len
                }
            }
            ActionKind::OpenDoor { assisted: true, .. } => door_open,
            ActionKind::OpenDoor { .. }
            | ActionKind::Load { .. }
            | ActionKind::Unload { .. }
            | ActionKind::Wait { .. } => {
                run.timer -= DT;
                run.timer <= TIME_EPS
            }
        };
        if !done {
            return Ok(());
        }

        let action = run.action.clone();
        robot.status = RobotStatus::Idle;
        if action.is_motion() {
            let (node, _) = self.world.nearest_node(robot.pose.x, robot.pose.y);
            robot.location = self.world.nodes()[node].id.clone();
        }
        match &action.kind {
            ActionKind::OpenDoor { door, assisted: false } => {
                let d = self.world.door_idx(door).ok_or_else(|| format!("unknown door {door}"))?;
                self.open_door(d, t);
            }
            ActionKind::Load { object } => self.load(i, object)?,
            ActionKind::Unload { object } => self.unload(i, object)?,
            _ => {}
        }
        self.completed[i] = true;
        self.trace.push(
            t,
            Event::ActionDone {
                robot: i,
                action: action.to_string(),
            },
        );
        Ok(())
    }

    fn load(&mut self, i: usize, object: &str) -> Result<(), String> {
        let robot = &self.robots[i];
        let at_station = match self.objects.get(object) {
            Some(ObjectLocation::Station(st)) => self.world.station(st).is_some_and(|s| s.node == robot.location),
            _ => false,
        };
        if !at_station {
            return Err(format!("robot {i} cannot load {object} at {}", robot.location));
        }
        if robot.carried.len() >= self.specs[i].capacity {
            return Err(format!("robot {i} is at capacity"));
        }
        self.objects.insert(object.to_string(), ObjectLocation::Robot(i));
        self.robots[i].carried.insert(object.to_string());
        Ok(())
    }

    fn unload(&mut self, i: usize, object: &str) -> Result<(), String> {
        let robot = &self.robots[i];
        if !robot.carried.contains(object) || robot.location != self.world.base_station().node {
            return Err(format!("robot {i} cannot unload {object} at {}", robot.location));
        }
        self.objects.insert(object.to_string(), ObjectLocation::Base);
        self.robots[i].carried.remove(object);
        Ok(())
    }

    /// Every object is in exactly one place and robots agree with the object table.
    fn conservation(&self) -> Result<(), String> {
        for (obj, loc) in &self.objects {
            if let ObjectLocation::Robot(i) = loc {
                if !self.robots.get(*i).is_some_and(|r| r.carried.contains(obj)) {
                    return Err(format!("conservation: {obj} is on robot {i} but not carried"));
                }
            }
        }
        for (i, r) in self.robots.iter().enumerate() {
            for obj in &r.carried {
                if self.objects.get(obj) != Some(&ObjectLocation::Robot(i)) {
                    return Err(format!("conservation: robot {i} carries untracked {obj}"));
                }
            }
        }
        Ok(())
    }

    fn record_progress(&mut self, t: f64) {
        for i in 0..self.robots.len() {
            if self.goal_at[i].is_none() && task_done(&self.objects, &self.tasks[i]) {
                self.goal_at[i] = Some(t);
                self.trace.push(t, Event::Goal { robot: i });
            }
        }
        if !self.human_done {
            if let Some(t_h) = self.human.finished_at() {
                self.human_done = true;
                self.trace.push(t, Event::HumanDone { t_h });
            }
        }
    }

    fn check_end(&mut self) {
        if self.ended {
            return;
        }
        if self.human_done && self.goal_at.iter().all(Option::is_some) {
            self.end(false, None);
        } else if self.clock >= T_MAX - TIME_EPS {
            self.end(true, Some("timeout".into()));
        }
    }

    fn end(&mut self, aborted: bool, reason: Option<String>) {
        self.end_at(self.clock, aborted, reason);
    }

    fn end_at(&mut self, t: f64, aborted: bool, reason: Option<String>) {
        self.ended = true;
        self.trace.push(t, Event::TrialEnd { aborted, reason });
    }
}

fn task_done(objects: &BTreeMap<String, ObjectLocation>, task: &TaskSpec) -> bool {
    task.deliveries
        .iter()
        .all(|d| objects.get(&d.object) == Some(&ObjectLocation::Base))
}

/// Heading from the robot toward the far side of `door`.
fn door_bearing(world: &WorldMap, door: &str, x: f64, y: f64) -> Option<f64> {
    let d = world.door_idx(door)?;
    let (a, b) = world.door_endpoints(d);
    let (here, _) = world.nearest_node(x, y);
    let other = if here == a {
        b
    } else if here == b {
        a
    } else {
        return None;
    };
    let n = &world.nodes()[other];
    Some((n.y - y).atan2(n.x - x))
}

/// Runs one batch trial with the simulated human.
pub fn run_trial(scenario: &Scenario, seed: u64, feedback: bool) -> Result<(TrialResult, Trace), TrialError> {
    let human = SimulatedHuman::new(&scenario.human, feedback, seed)?;
    Ok(Trial::new(scenario, seed, feedback, Box::new(human)).run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::office3;

    #[test]
    fn office3_trial_completes() {
        let s = office3();
        let (r, trace) = run_trial(&s, 1, true).unwrap();
        assert!(!r.aborted, "{:?}", trace.records.last());
        assert_eq!(r.t_r.len(), 3);
        assert!(r.t_r.iter().all(|&t| t > 0.0));
        assert!(r.t_h >= s.human.own_task_min_s);
    }

    #[test]
    fn zero_deliveries_give_zero_robot_times() {
        let mut s = office3();
        for t in &mut s.tasks {
            t.deliveries.clear();
        }
        let (r, _) = run_trial(&s, 3, false).unwrap();
        assert_eq!(r.t_r, vec![0.0; 3]);
        assert_eq!(r.t_all, r.t_h);
    }

    #[test]
    fn without_feedback_constraints_stay_empty() {
        let (r, trace) = run_trial(&office3(), 5, false).unwrap();
        assert_eq!(r.replans, 0);
        assert!(!trace.iter().any(|rec| matches!(rec.event, Event::Feedback { .. })));
    }

    #[test]
    fn null_human_means_timeout_behind_a_closed_door() {
        let s = office3();
        let (r, trace) = Trial::new(&s, 0, true, Box::new(NullHuman)).run();
        assert!(r.aborted);
        assert_eq!(r.t_h, 0.0);
        let last = trace.records.last().unwrap();
        assert_eq!(last.t, T_MAX);
    }
}
