//! The negotiation loop body: issue plan actions, render a frame of poses and
//! trajectories, take at most one piece of human feedback, turn it into
//! constraints, and replan the team when the constraints change.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::constraints::{ConstraintSet, Window};
use crate::domain::{
    symbolic_state, DoorState, ObjectLocation, Pose, ProjectionError, RobotSpec, RobotState,
    RobotStatus, SymbolicState, TaskSpec, WorldMap,
};
use crate::human::FeedbackEvent;
use crate::motion::{route, MotionError, Trajectory};
use crate::planner::{apply_action, plan_team, Action, ActionKind, Goal, Plan, TeamError, TeamMember, TeamPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediatorError {
    #[error("expected {expected} entries, got {got} {what}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Planning(#[from] TeamError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("robot {robot}: {source}")]
    Routing { robot: usize, source: MotionError },
    #[error("robot {robot}: {reason}")]
    Inconsistent { robot: usize, reason: String },
}

/// One robot's avatar in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotView {
    pub id: usize,
    pub pose: Pose,
    pub trajectory: Vec<(f64, f64)>,
    /// Label of the action being executed, e.g. `approach(D)`.
    pub action: Option<String>,
    pub status: RobotStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoorView {
    pub id: String,
    pub state: DoorState,
}

/// A rendered snapshot of the team.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub tick: f64,
    pub robots: Vec<RobotView>,
    pub doors: Vec<DoorView>,
    pub constraints: ConstraintSet,
}

/// FIFO handoff of feedback from whoever produces it to the tick loop.
#[derive(Debug, Clone, Default)]
pub struct Inbox {
    queue: Arc<Mutex<VecDeque<FeedbackEvent>>>,
}

impl Inbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, event: FeedbackEvent) {
        self.queue.lock().expect("inbox lock").push_back(event);
    }

    pub fn pop(&self) -> Option<FeedbackEvent> {
        self.queue.lock().expect("inbox lock").pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.lock().expect("inbox lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Assembles a frame; a pure function of its inputs.
pub fn vslz(
    trajectories: &[Trajectory],
    poses: &[Pose],
    labels: &[Option<String>],
    statuses: &[RobotStatus],
    clock: f64,
    doors: &[DoorView],
    constraints: &ConstraintSet,
) -> Result<Frame, MediatorError> {
    let n = poses.len();
    for (what, got) in [
        ("trajectories", trajectories.len()),
        ("labels", labels.len()),
        ("statuses", statuses.len()),
    ] {
        if got != n {
            return Err(MediatorError::LengthMismatch { what, expected: n, got });
        }
    }
    let robots = (0..n)
        .map(|i| RobotView {
            id: i,
            pose: poses[i],
            trajectory: trajectories[i].points().to_vec(),
            action: labels[i].clone(),
            status: statuses[i],
        })
        .collect();
    Ok(Frame {
        tick: clock,
        robots,
        doors: doors.to_vec(),
        constraints: constraints.clone(),
    })
}

/// Takes the oldest pending feedback, if any.
pub fn get_fdk(inbox: &Inbox) -> Option<FeedbackEvent> {
    inbox.pop()
}

/// Converts feedback into constraints. A busy event replaces any current
/// window; windows that ended before `clock` are dropped.
pub fn cnsts(event: Option<&FeedbackEvent>, current: &ConstraintSet, clock: f64) -> ConstraintSet {
    match event {
        Some(e) => ConstraintSet::new([Window::new(e.issued_at, e.issued_at + e.kind.duration_s())])
            .without_expired(clock),
        None => current.without_expired(clock),
    }
}

/// Every delivery's object is at the base.
pub fn goal_reached(state: &SymbolicState, goal: &TaskSpec) -> bool {
    goal.deliveries
        .iter()
        .all(|d| state.object_locations.get(&d.object) == Some(&ObjectLocation::Base))
}

fn task_done(objects: &BTreeMap<String, ObjectLocation>, task: &TaskSpec) -> bool {
    task.deliveries
        .iter()
        .all(|d| objects.get(&d.object) == Some(&ObjectLocation::Base))
}

/// Execution status of a robot's current action as seen at the start of a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exec {
    Idle,
    Running { remaining_s: f64 },
    Completed,
}

/// World state handed to the mediator each tick.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub clock: f64,
    pub robots: &'a [RobotState],
    pub exec: &'a [Exec],
    pub objects: &'a BTreeMap<String, ObjectLocation>,
    pub doors: &'a BTreeMap<String, DoorState>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Start {
        robot: usize,
        action: Action,
        trajectory: Trajectory,
    },
    Abort {
        robot: usize,
    },
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub commands: Vec<Command>,
    pub frame: Frame,
    pub feedback: Option<FeedbackEvent>,
    pub replanned: bool,
    /// All robots reached their goals.
    pub terminal: bool,
    /// Present when planning failed; the trial should abort.
    pub abort: Option<MediatorError>,
}

/// Mediator state: constraints, plans, trajectories and poses per robot.
#[derive(Debug, Clone)]
pub struct Mediator {
    world: Arc<WorldMap>,
    robots: Vec<RobotSpec>,
    tasks: Vec<TaskSpec>,
    pub constraints: ConstraintSet,
    pub plans: Vec<Plan>,
    pub trajectories: Vec<Trajectory>,
    pub poses: Vec<Pose>,
    pub clock: f64,
    /// Action currently executing and the symbolic state it started from.
    running: Vec<Option<(Action, SymbolicState)>>,
    /// The running action was carried over a replan and is no longer the plan front.
    detached: Vec<bool>,
    /// Result of the latest team planning call, with each member's start time.
    pub last_team: TeamPlan,
    pub last_starts: Vec<f64>,
    pub replans: u32,
}

impl Mediator {
    /// Computes the initial team plan.
    pub fn new(
        world: Arc<WorldMap>,
        robots: Vec<RobotSpec>,
        tasks: Vec<TaskSpec>,
        states: &[RobotState],
        objects: &BTreeMap<String, ObjectLocation>,
        doors: &BTreeMap<String, DoorState>,
        clock: f64,
    ) -> Result<Self, MediatorError> {
        let mut m = Self::with_plans(world, robots, tasks, states, vec![Plan::default(); states.len()], clock)?;
        m.plan_initial(states, objects, doors)?;
        Ok(m)
    }

    /// Plans the whole team from the given states.
    pub fn plan_initial(
        &mut self,
        states: &[RobotState],
        objects: &BTreeMap<String, ObjectLocation>,
        doors: &BTreeMap<String, DoorState>,
    ) -> Result<(), MediatorError> {
        let members = self.members_from_projection(states, objects, doors, self.clock)?;
        self.run_team(&members)
    }

    /// Starts from given plans instead of planning.
    pub fn with_plans(
        world: Arc<WorldMap>,
        robots: Vec<RobotSpec>,
        tasks: Vec<TaskSpec>,
        states: &[RobotState],
        plans: Vec<Plan>,
        clock: f64,
    ) -> Result<Self, MediatorError> {
        let n = robots.len();
        for (what, got) in [("tasks", tasks.len()), ("states", states.len()), ("plans", plans.len())] {
            if got != n {
                return Err(MediatorError::LengthMismatch { what, expected: n, got });
            }
        }
        Ok(Mediator {
            world,
            robots,
            tasks,
            constraints: ConstraintSet::empty(),
            plans,
            trajectories: states.iter().map(|r| Trajectory::stationary(r.pose.x, r.pose.y)).collect(),
            poses: states.iter().map(|r| r.pose).collect(),
            clock,
            running: vec![None; n],
            detached: vec![false; n],
            last_team: TeamPlan::default(),
            last_starts: vec![clock; n],
            replans: 0,
        })
    }

    pub fn world(&self) -> &WorldMap {
        &self.world
    }

    pub fn running_action(&self, robot: usize) -> Option<&Action> {
        self.running[robot].as_ref().map(|(a, _)| a)
    }

    fn members_from_projection(
        &self,
        states: &[RobotState],
        objects: &BTreeMap<String, ObjectLocation>,
        doors: &BTreeMap<String, DoorState>,
        clock: f64,
    ) -> Result<Vec<TeamMember>, MediatorError> {
        states
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(TeamMember {
                    robot: self.robots[i].clone(),
                    state: symbolic_state(&self.world, r, objects, doors)?,
                    goal: Goal::from_task(&self.tasks[i]),
                    start: clock,
                })
            })
            .collect()
    }

    fn run_team(&mut self, members: &[TeamMember]) -> Result<(), MediatorError> {
        let team = plan_team(members, &self.world, &self.constraints)?;
        self.plans = team.plans.clone();
        self.last_starts = members.iter().map(|m| m.start).collect();
        self.last_team = team;
        Ok(())
    }

    /// One pass of the loop body for the tick at `snap.clock`.
    pub fn step(&mut self, snap: &Snapshot<'_>, inbox: &Inbox) -> StepOutput {
        let mut commands = Vec::new();
        let mut abort = None;
        let n = self.robots.len();
        self.clock = snap.clock;
        if snap.robots.len() != n || snap.exec.len() != n {
            abort = Some(MediatorError::LengthMismatch {
                what: "robot snapshots",
                expected: n,
                got: snap.robots.len().min(snap.exec.len()),
            });
        }

        let mut all_done = true;
        if abort.is_none() {
            for i in 0..n {
                let robot = &snap.robots[i];
                if snap.exec[i] == Exec::Completed {
                    if !std::mem::take(&mut self.detached[i]) {
                        self.plans[i].pop();
                    }
                    self.running[i] = None;
                }
                if snap.exec[i] != Exec::Completed && snap.exec[i] != Exec::Idle {
                    // still running: keep the trajectory
                } else if let Some(front) = self.plans[i].front().cloned() {
                    match self.issue(i, robot, &front, snap) {
                        Ok(cmd) => commands.push(cmd),
                        Err(e) => abort = abort.or(Some(e)),
                    }
                } else {
                    self.trajectories[i] = Trajectory::stationary(robot.pose.x, robot.pose.y);
                    if !task_done(snap.objects, &self.tasks[i]) {
                        abort = abort.or(Some(MediatorError::Inconsistent {
                            robot: i,
                            reason: "plan finished before the goal was reached".into(),
                        }));
                    }
                }
                self.poses[i] = robot.pose;
                if self.running[i].is_some() || !task_done(snap.objects, &self.tasks[i]) {
                    all_done = false;
                }
            }
        }

        let labels: Vec<Option<String>> = self.running.iter().map(|r| r.as_ref().map(|(a, _)| a.to_string())).collect();
        let statuses: Vec<RobotStatus> = snap.robots.iter().map(|r| r.status).collect();
        let doors: Vec<DoorView> = self
            .world
            .doors()
            .iter()
            .map(|d| DoorView {
                id: d.id.clone(),
                state: snap.doors.get(&d.id).copied().unwrap_or(d.state),
            })
            .collect();
        let frame = if abort.is_none() {
            vslz(&self.trajectories, &self.poses, &labels, &statuses, snap.clock, &doors, &self.constraints)
                .expect("lengths checked")
        } else {
            Frame {
                tick: snap.clock,
                robots: Vec::new(),
                doors,
                constraints: self.constraints.clone(),
            }
        };

        let feedback = get_fdk(inbox);
        let next = cnsts(feedback.as_ref(), &self.constraints, snap.clock);
        let mut replanned = false;
        if next != self.constraints && abort.is_none() {
            self.constraints = next;
            replanned = true;
            self.replans += 1;
            match self.replan(snap, &mut commands) {
                Ok(()) => {}
                Err(e) => abort = Some(e),
            }
        } else if next != self.constraints {
            self.constraints = next;
        }

        StepOutput {
            terminal: all_done && abort.is_none(),
            commands,
            frame,
            feedback,
            replanned,
            abort,
        }
    }

    fn issue(
        &mut self,
        i: usize,
        robot: &RobotState,
        action: &Action,
        snap: &Snapshot<'_>,
    ) -> Result<Command, MediatorError> {
        let state = symbolic_state(&self.world, robot, snap.objects, snap.doors)?;
        let trajectory = route(action, &state.robot_location, &self.world)
            .map_err(|source| MediatorError::Routing { robot: i, source })?;
        self.trajectories[i] = trajectory.clone();
        self.running[i] = Some((action.clone(), state));
        Ok(Command::Start {
            robot: i,
            action: action.clone(),
            trajectory,
        })
    }

    /// Replans every robot from its current state under the new constraints.
    ///
    /// Travel and load/unload in progress finish first and the new plan starts
    /// from their outcome; waiting for the door (or an explicit wait) is abandoned.
    fn replan(&mut self, snap: &Snapshot<'_>, commands: &mut Vec<Command>) -> Result<(), MediatorError> {
        let n = self.robots.len();
        let mut members = Vec::with_capacity(n);
        for i in 0..n {
            let robot = &snap.robots[i];
            let goal = Goal::from_task(&self.tasks[i]);
            let running = self.running[i].clone();
            let keep = running.as_ref().is_some_and(|(a, _)| {
                !matches!(
                    a.kind,
                    ActionKind::Wait { .. } | ActionKind::OpenDoor { assisted: true, .. }
                )
            });
            let member = match running {
                Some((action, at_issue)) if keep => {
                    let mut base = at_issue;
                    base.object_locations = snap.objects.clone();
                    for o in &robot.carried {
                        base.object_locations.insert(o.clone(), ObjectLocation::Robot(i));
                    }
                    base.door_states = snap.doors.clone();
                    let mut post = apply_action(&self.world, &self.robots[i], &base, &action).map_err(|e| {
                        MediatorError::Inconsistent {
                            robot: i,
                            reason: format!("running action no longer applies: {e}"),
                        }
                    })?;
                    post.door_states = snap.doors.clone();
                    let remaining = match snap.exec[i] {
                        Exec::Running { remaining_s } => remaining_s,
                        _ => action.duration,
                    };
                    self.detached[i] = true;
                    TeamMember {
                        robot: self.robots[i].clone(),
                        state: post,
                        goal,
                        start: snap.clock + remaining.max(0.0),
                    }
                }
                other => {
                    self.detached[i] = false;
                    if other.is_some() {
                        commands.push(Command::Abort { robot: i });
                        self.running[i] = None;
                        self.trajectories[i] = Trajectory::stationary(robot.pose.x, robot.pose.y);
                    }
                    TeamMember {
                        robot: self.robots[i].clone(),
                        state: symbolic_state(&self.world, robot, snap.objects, snap.doors)?,
                        goal,
                        start: snap.clock,
                    }
                }
            };
            members.push(member);
        }
        self.run_team(&members)
    }
}
