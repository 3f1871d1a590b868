//! Symbolic task planning: the approach / opendoor / gothrough / load / unload
//! action model, a forward search that minimizes estimated completion time, and
//! sequential team planning against a shared door reservation table.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{door_leg_start, ConstraintSet, Reservation};
use crate::domain::{
    Delivery, DoorState, ObjectLocation, RobotSpec, SymbolicState, TaskSpec, WorldMap,
};

mod search;
mod team;

pub use search::{plan_single, plan_single_reserved, PlanOutcome, SEARCH_LIMIT};
pub use team::{plan_team, TeamError, TeamMember, TeamPlan};

/// Turning in place to face a door after arriving next to it.
pub const TURN_S: f64 = 1.0;
/// Estimated wait for the human to open an assisted door.
pub const ASSISTED_OPEN_S: f64 = 10.0;
/// A robot opening an unassisted door by itself.
pub const SELF_OPEN_S: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Node(String),
    Door(String),
}

impl Target {
    pub fn id(&self) -> &str {
        match self {
            Target::Node(id) | Target::Door(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionKind {
    Approach { target: Target },
    #[serde(rename = "opendoor")]
    OpenDoor { door: String, assisted: bool },
    #[serde(rename = "gothrough")]
    GoThrough { door: String },
    Load { object: String },
    Unload { object: String },
    Wait { seconds: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    #[serde(flatten)]
    pub kind: ActionKind,
    /// Estimated duration in seconds; always > 0.
    pub duration: f64,
}

/// Sort key used for deterministic tie-breaking: kind (alphabetical), then target.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ActionKey(u8, String, u8);

impl Action {
    pub fn approach_node(node: &str, duration: f64) -> Self {
        Action {
            kind: ActionKind::Approach {
                target: Target::Node(node.to_string()),
            },
            duration,
        }
    }

    pub fn approach_door(door: &str, duration: f64) -> Self {
        Action {
            kind: ActionKind::Approach {
                target: Target::Door(door.to_string()),
            },
            duration,
        }
    }

    pub fn key(&self) -> ActionKey {
        match &self.kind {
            ActionKind::Approach { target: Target::Node(n) } => ActionKey(0, n.clone(), 0),
            ActionKind::Approach { target: Target::Door(d) } => ActionKey(0, d.clone(), 1),
            ActionKind::GoThrough { door } => ActionKey(1, door.clone(), 0),
            ActionKind::Load { object } => ActionKey(2, object.clone(), 0),
            ActionKind::OpenDoor { door, .. } => ActionKey(3, door.clone(), 0),
            ActionKind::Unload { object } => ActionKey(4, object.clone(), 0),
            ActionKind::Wait { .. } => ActionKey(5, String::new(), 0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ActionKind::Approach { .. } => "approach",
            ActionKind::OpenDoor { .. } => "opendoor",
            ActionKind::GoThrough { .. } => "gothrough",
            ActionKind::Load { .. } => "load",
            ActionKind::Unload { .. } => "unload",
            ActionKind::Wait { .. } => "wait",
        }
    }

    pub fn is_motion(&self) -> bool {
        matches!(self.kind, ActionKind::Approach { .. } | ActionKind::GoThrough { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ActionKind::Approach { target } => write!(f, "approach({})", target.id()),
            ActionKind::OpenDoor { door, .. } => write!(f, "opendoor({door})"),
            ActionKind::GoThrough { door } => write!(f, "gothrough({door})"),
            ActionKind::Load { object } => write!(f, "load({object})"),
            ActionKind::Unload { object } => write!(f, "unload({object})"),
            ActionKind::Wait { seconds } => write!(f, "wait({seconds:.1})"),
        }
    }
}

/// Action queue; the front is executed next.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub actions: VecDeque<Action>,
}

impl Plan {
    pub fn new(actions: impl IntoIterator<Item = Action>) -> Self {
        Plan {
            actions: actions.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn front(&self) -> Option<&Action> {
        self.actions.front()
    }

    pub fn pop(&mut self) -> Option<Action> {
        self.actions.pop_front()
    }

    pub fn labels(&self) -> Vec<String> {
        self.actions.iter().map(ToString::to_string).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Action> {
        self.actions.iter()
    }
}

/// What a robot still has to achieve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub deliveries: Vec<Delivery>,
    /// Optionally end at this node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
}

impl Goal {
    pub fn from_task(task: &TaskSpec) -> Self {
        Goal {
            deliveries: task.deliveries.clone(),
            destination: None,
        }
    }

    pub fn reach(node: &str) -> Self {
        Goal {
            deliveries: Vec::new(),
            destination: Some(node.to_string()),
        }
    }

    pub fn is_satisfied(&self, state: &SymbolicState) -> bool {
        self.deliveries
            .iter()
            .all(|d| state.object_locations.get(&d.object) == Some(&ObjectLocation::Base))
            && self
                .destination
                .as_ref()
                .is_none_or(|n| *n == state.robot_location)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("goal unreachable: {subgoal}")]
    Unreachable { subgoal: String },
    #[error("search exceeded {limit} labels")]
    SearchLimit { limit: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step} `{action}`: {reason}")]
pub struct InvalidStep {
    pub step: usize,
    pub action: String,
    pub reason: String,
}

fn invalid(step: usize, action: &Action, reason: impl Into<String>) -> InvalidStep {
    InvalidStep {
        step,
        action: action.to_string(),
        reason: reason.into(),
    }
}

/// Applies one action to a symbolic state, checking its preconditions.
///
/// Doors are modelled as closing behind every action except `opendoor`: an
/// opened door is only usable by the immediately following `gothrough`.
pub fn apply_action(
    world: &WorldMap,
    robot: &RobotSpec,
    state: &SymbolicState,
    action: &Action,
) -> Result<SymbolicState, InvalidStep> {
    let step = state.step_index as usize;
    if !(action.duration > 0.0) {
        return Err(invalid(step, action, "duration must be > 0"));
    }
    let here = world
        .node_idx(&state.robot_location)
        .ok_or_else(|| invalid(step, action, "robot location is not a node"))?;
    let mut next = state.clone();
    next.step_index += 1;
    let close_all = |s: &mut SymbolicState| {
        for v in s.door_states.values_mut() {
            *v = DoorState::Closed;
        }
    };

    match &action.kind {
        ActionKind::Approach { target } => {
            let dest = match target {
                Target::Node(n) => {
                    next.facing_door = None;
                    world
                        .node_idx(n)
                        .ok_or_else(|| invalid(step, action, "unknown node"))?
                }
                Target::Door(d) => {
                    let di = world
                        .door_idx(d)
                        .ok_or_else(|| invalid(step, action, "unknown door"))?;
                    if state.facing_door.as_deref() == Some(d.as_str()) {
                        return Err(invalid(step, action, "already facing the door"));
                    }
                    next.facing_door = Some(d.clone());
                    world
                        .door_side(di, here)
                        .ok_or_else(|| invalid(step, action, "door is not reachable in this room"))?
                }
            };
            if world.room_distance(here, dest).is_infinite() {
                return Err(invalid(step, action, "target is in another room"));
            }
            if matches!(target, Target::Node(_)) && dest == here {
                return Err(invalid(step, action, "already at the target"));
            }
            next.robot_location = world.nodes()[dest].id.clone();
            close_all(&mut next);
        }
        ActionKind::OpenDoor { door, .. } => {
            if state.facing_door.as_deref() != Some(door.as_str()) {
                return Err(invalid(step, action, "not facing the door"));
            }
            if state.door_states.get(door) != Some(&DoorState::Closed) {
                return Err(invalid(step, action, "door is not closed"));
            }
            close_all(&mut next);
            next.door_states.insert(door.clone(), DoorState::Open);
        }
        ActionKind::GoThrough { door } => {
            if state.facing_door.as_deref() != Some(door.as_str()) {
                return Err(invalid(step, action, "not facing the door"));
            }
            if state.door_states.get(door) != Some(&DoorState::Open) {
                return Err(invalid(step, action, "door is not open"));
            }
            let di = world.door_idx(door).expect("door in state");
            let (a, b) = world.door_endpoints(di);
            let other = if a == here { b } else { a };
            next.robot_location = world.nodes()[other].id.clone();
            next.facing_door = None;
            close_all(&mut next);
        }
        ActionKind::Load { object } => {
            let Some(ObjectLocation::Station(st)) = state.object_locations.get(object) else {
                return Err(invalid(step, action, "object is not at a station"));
            };
            let station = world
                .station(st)
                .ok_or_else(|| invalid(step, action, "unknown station"))?;
            if station.node != state.robot_location {
                return Err(invalid(step, action, "robot is not at the object's station"));
            }
            let carried = state
                .object_locations
                .values()
                .filter(|l| **l == ObjectLocation::Robot(robot.id))
                .count();
            if carried >= robot.capacity {
                return Err(invalid(step, action, "robot is at capacity"));
            }
            next.object_locations
                .insert(object.clone(), ObjectLocation::Robot(robot.id));
            next.facing_door = None;
            close_all(&mut next);
        }
        ActionKind::Unload { object } => {
            if state.object_locations.get(object) != Some(&ObjectLocation::Robot(robot.id)) {
                return Err(invalid(step, action, "robot is not carrying the object"));
            }
            if world.base_station().node != state.robot_location {
                return Err(invalid(step, action, "robot is not at the base station"));
            }
            next.object_locations.insert(object.clone(), ObjectLocation::Base);
            next.facing_door = None;
            close_all(&mut next);
        }
        ActionKind::Wait { .. } => {
            close_all(&mut next);
        }
    }
    Ok(next)
}

/// Simulates a plan from `state`, returning every intermediate state
/// (`result[0] == state`).
pub fn simulate_plan(
    world: &WorldMap,
    robot: &RobotSpec,
    state: &SymbolicState,
    plan: &Plan,
) -> Result<Vec<SymbolicState>, InvalidStep> {
    let mut states = vec![state.clone()];
    for action in plan.iter() {
        let next = apply_action(world, robot, states.last().unwrap(), action)?;
        states.push(next);
    }
    Ok(states)
}

/// A scheduled door leg of a plan: when the request starts and the traversal ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoorLeg {
    pub door: usize,
    pub request_start: f64,
    pub through_start: f64,
    pub end: f64,
}

/// Start and end time of every action from `start`, with assisted requests
/// deferred past any window that would overlap them.
pub fn schedule(
    plan: &Plan,
    start: f64,
    constraints: &ConstraintSet,
) -> Vec<(f64, f64)> {
    let actions: Vec<&Action> = plan.iter().collect();
    let mut t = start;
    let mut out = Vec::with_capacity(actions.len());
    for (i, a) in actions.iter().enumerate() {
        let s = match &a.kind {
            ActionKind::OpenDoor { assisted: true, .. } => {
                let through = match actions.get(i + 1).map(|n| &n.kind) {
                    Some(ActionKind::GoThrough { .. }) => actions[i + 1].duration,
                    _ => 0.0,
                };
                door_leg_start(t, 0, a.duration, through, constraints, &[])
            }
            _ => t,
        };
        t = s + a.duration;
        out.push((s, t));
    }
    out
}

/// Estimated completion time of `plan` started at `start`.
pub fn estimate_completion(plan: &Plan, start: f64, constraints: &ConstraintSet) -> f64 {
    schedule(plan, start, constraints)
        .last()
        .map_or(start, |&(_, end)| end)
}

/// Door legs (assisted requests followed by their traversal) of a plan.
pub fn door_legs(
    world: &WorldMap,
    plan: &Plan,
    start: f64,
    constraints: &ConstraintSet,
) -> Vec<DoorLeg> {
    let times = schedule(plan, start, constraints);
    let actions: Vec<&Action> = plan.iter().collect();
    let mut legs = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        if let ActionKind::OpenDoor { door, assisted: true } = &a.kind {
            let door = world.door_idx(door).expect("known door");
            let (through_start, end) = match actions.get(i + 1).map(|n| &n.kind) {
                Some(ActionKind::GoThrough { .. }) => times[i + 1],
                _ => (times[i].1, times[i].1),
            };
            legs.push(DoorLeg {
                door,
                request_start: times[i].0,
                through_start,
                end,
            });
        }
    }
    legs
}

/// Door service intervals a plan claims, for the team reservation table.
pub fn reservations(
    world: &WorldMap,
    plan: &Plan,
    start: f64,
    constraints: &ConstraintSet,
) -> Vec<Reservation> {
    door_legs(world, plan, start, constraints)
        .into_iter()
        .map(|l| Reservation {
            door: l.door,
            start: l.request_start,
            end: l.end,
        })
        .collect()
}

/// Start times of every traversal of an assisted door in the plan, including
/// traversals through an already-open door.
pub fn assisted_traversal_starts(
    world: &WorldMap,
    plan: &Plan,
    start: f64,
    constraints: &ConstraintSet,
) -> Vec<f64> {
    let times = schedule(plan, start, constraints);
    plan.iter()
        .zip(times)
        .filter_map(|(a, (s, _))| match &a.kind {
            ActionKind::GoThrough { door } if world.door(door).is_some_and(|d| d.assisted) => {
                Some(s)
            }
            ActionKind::OpenDoor { assisted: true, .. } => Some(s),
            _ => None,
        })
        .collect()
}

/// Objects' locations with every goal object placed at its pickup station.
pub fn fresh_objects(goals: &[Goal]) -> BTreeMap<String, ObjectLocation> {
    goals
        .iter()
        .flat_map(|g| g.deliveries.iter())
        .map(|d| (d.object.clone(), ObjectLocation::Station(d.pickup.clone())))
        .collect()
}
