//! Label-setting forward search over the symbolic state space.
//!
//! Labels are ordered by (estimated time, number of actions, action sequence).
//! Door waits are monotone in arrival time, so earliest arrival is never worse;
//! the remaining tie-break criteria are kept exact by retaining every label at a
//! state that no other label beats on all three.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::constraints::{door_leg_start, ConstraintSet, Reservation, TIME_EPS};
use crate::domain::{DoorState, ObjectLocation, RobotSpec, SymbolicState, WorldMap};

use super::{
    Action, ActionKey, ActionKind, Goal, Plan, PlanError, ASSISTED_OPEN_S, SELF_OPEN_S, TURN_S,
};

/// Upper bound on generated labels before giving up.
pub const SEARCH_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    /// Estimated completion time (absolute seconds).
    pub finish: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Obj {
    AtStation,
    Carried,
    Delivered,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    loc: usize,
    facing: Option<usize>,
    /// Doors open right now (bit per door index).
    open: u64,
    objects: Vec<Obj>,
    /// Doors were already open when planning started; such a start must not
    /// dominate the same place once the robot has opened the door itself.
    inherited: bool,
}

struct Label {
    node: Node,
    time: f64,
    actions: Vec<Action>,
    keys: Vec<ActionKey>,
    alive: bool,
}

/// Plans one robot with no other robots' door reservations.
pub fn plan_single(
    state: &SymbolicState,
    goal: &Goal,
    robot: &RobotSpec,
    world: &WorldMap,
    constraints: &ConstraintSet,
    now: f64,
) -> Result<PlanOutcome, PlanError> {
    plan_single_reserved(state, goal, robot, world, constraints, &[], now)
}

/// Plans one robot; assisted door legs also avoid `reservations`.
pub fn plan_single_reserved(
    state: &SymbolicState,
    goal: &Goal,
    robot: &RobotSpec,
    world: &WorldMap,
    constraints: &ConstraintSet,
    reservations: &[Reservation],
    now: f64,
) -> Result<PlanOutcome, PlanError> {
    let problem = Problem::new(state, goal, robot, world, constraints, reservations)?;
    problem.solve(now)
}

struct Problem<'a> {
    world: &'a WorldMap,
    robot: &'a RobotSpec,
    goal: &'a Goal,
    constraints: &'a ConstraintSet,
    reservations: &'a [Reservation],
    start: Node,
    pickup_nodes: Vec<usize>,
    base_node: usize,
    destination: Option<usize>,
    /// Objects this robot carries that are not part of the goal.
    extra_carried: usize,
}

impl<'a> Problem<'a> {
    fn new(
        state: &SymbolicState,
        goal: &'a Goal,
        robot: &'a RobotSpec,
        world: &'a WorldMap,
        constraints: &'a ConstraintSet,
        reservations: &'a [Reservation],
    ) -> Result<Self, PlanError> {
        let unreachable = |subgoal: String| PlanError::Unreachable { subgoal };
        let loc = world
            .node_idx(&state.robot_location)
            .ok_or_else(|| unreachable(format!("robot location `{}` is not a node", state.robot_location)))?;
        let facing = match &state.facing_door {
            Some(d) => Some(
                world
                    .door_idx(d)
                    .ok_or_else(|| unreachable(format!("unknown door `{d}`")))?,
            ),
            None => None,
        };
        assert!(world.doors().len() <= 64, "at most 64 doors are supported");
        let mut open = 0u64;
        for (i, d) in world.doors().iter().enumerate() {
            if state.door_states.get(&d.id).copied().unwrap_or(d.state) == DoorState::Open {
                open |= 1 << i;
            }
        }
        let mut objects = Vec::new();
        let mut pickup_nodes = Vec::new();
        for d in &goal.deliveries {
            let describe = || format!("deliver `{}` from {} to {}", d.object, d.pickup, d.dropoff);
            let pickup = world
                .station(&d.pickup)
                .and_then(|s| world.node_idx(&s.node))
                .ok_or_else(|| unreachable(format!("{}: unknown pickup station", describe())))?;
            if world.station(&d.dropoff).map(|s| &s.node) != Some(&world.base_station().node) {
                return Err(unreachable(format!("{}: dropoff is not the base station", describe())));
            }
            let o = match state.object_locations.get(&d.object) {
                Some(ObjectLocation::Station(s)) if *s == d.pickup => Obj::AtStation,
                Some(ObjectLocation::Robot(r)) if *r == robot.id => Obj::Carried,
                Some(ObjectLocation::Base) => Obj::Delivered,
                Some(other) => {
                    return Err(unreachable(format!("{}: object is at {other:?}", describe())))
                }
                None => return Err(unreachable(format!("{}: unknown object", describe()))),
            };
            objects.push(o);
            pickup_nodes.push(pickup);
        }
        let goal_objects: Vec<&str> = goal.deliveries.iter().map(|d| d.object.as_str()).collect();
        let extra_carried = state
            .object_locations
            .iter()
            .filter(|(o, l)| **l == ObjectLocation::Robot(robot.id) && !goal_objects.contains(&o.as_str()))
            .count();
        let destination = match &goal.destination {
            Some(n) => Some(
                world
                    .node_idx(n)
                    .ok_or_else(|| unreachable(format!("reach unknown node `{n}`")))?,
            ),
            None => None,
        };
        let base_node = world
            .node_idx(&world.base_station().node)
            .expect("validated base node");
        let needs_pickup = objects.contains(&Obj::AtStation);
        if needs_pickup && extra_carried >= robot.capacity {
            return Err(unreachable(format!(
                "robot {} is full with objects outside its task",
                robot.id
            )));
        }
        Ok(Problem {
            world,
            robot,
            goal,
            constraints,
            reservations,
            start: Node {
                loc,
                facing,
                open,
                objects,
                inherited: open != 0,
            },
            pickup_nodes,
            base_node,
            destination,
            extra_carried,
        })
    }

    fn is_goal(&self, n: &Node) -> bool {
        n.objects.iter().all(|o| *o == Obj::Delivered) && self.destination.is_none_or(|d| d == n.loc)
    }

    fn node_id(&self, i: usize) -> &str {
        &self.world.nodes()[i].id
    }

    /// Successors of `n` reached from time `t`: (actions, new node, finish time).
    fn successors(&self, n: &Node, t: f64, first: bool) -> Vec<(Vec<Action>, Node, f64)> {
        let w = self.world;
        let speed = self.robot.speed;
        let mut out = Vec::new();
        let moved = |loc: usize, facing: Option<usize>| Node {
            loc,
            facing,
            open: 0,
            objects: n.objects.clone(),
            inherited: false,
        };

        // approach a relevant node in the same room
        let mut targets: Vec<usize> = Vec::new();
        for (i, o) in n.objects.iter().enumerate() {
            match o {
                Obj::AtStation => targets.push(self.pickup_nodes[i]),
                Obj::Carried => targets.push(self.base_node),
                Obj::Delivered => {}
            }
        }
        if let Some(d) = self.destination {
            targets.push(d);
        }
        targets.sort_unstable();
        targets.dedup();
        for m in targets {
            let dist = w.room_distance(n.loc, m);
            if m == n.loc || dist.is_infinite() {
                continue;
            }
            let dur = dist / speed;
            out.push((vec![Action::approach_node(self.node_id(m), dur)], moved(m, None), t + dur));
        }

        // approach a door of this room
        for (d, door) in w.doors().iter().enumerate() {
            if n.facing == Some(d) {
                continue;
            }
            let Some(side) = w.door_side(d, n.loc) else {
                continue;
            };
            let dur = w.room_distance(n.loc, side) / speed + TURN_S;
            out.push((vec![Action::approach_door(&door.id, dur)], moved(side, Some(d)), t + dur));
        }

        if let Some(d) = n.facing {
            let door = &w.doors()[d];
            let through_s = w.door_edge(d).length / speed;
            let is_open = n.open & (1 << d) != 0;
            // an already-open assisted door is only used outside windows,
            // and only once opened for us or right at the start of the plan;
            // otherwise the robot waits for it to close and asks again
            let blocked = is_open
                && door.assisted
                && (self.constraints.blocking(t).is_some()
                    || (first
                        && self.reservations.iter().any(|r| {
                            r.door == d && t < r.end - TIME_EPS && r.start < t + through_s - TIME_EPS
                        })));
            if !is_open || blocked {
                let mut actions = Vec::new();
                let (open_s, start) = if door.assisted {
                    let s = door_leg_start(
                        t,
                        d,
                        ASSISTED_OPEN_S,
                        through_s,
                        self.constraints,
                        self.reservations,
                    );
                    (ASSISTED_OPEN_S, s)
                } else {
                    (SELF_OPEN_S, t)
                };
                if start > t + TIME_EPS {
                    actions.push(Action {
                        kind: ActionKind::Wait { seconds: start - t },
                        duration: start - t,
                    });
                }
                actions.push(Action {
                    kind: ActionKind::OpenDoor {
                        door: door.id.clone(),
                        assisted: door.assisted,
                    },
                    duration: open_s,
                });
                let next = Node {
                    loc: n.loc,
                    facing: n.facing,
                    open: 1 << d,
                    objects: n.objects.clone(),
                    inherited: false,
                };
                if !is_open || start > t + TIME_EPS {
                    out.push((actions, next, start + open_s));
                }
            } else {
                let (a, b) = w.door_endpoints(d);
                let other = if a == n.loc { b } else { a };
                out.push((
                    vec![Action {
                        kind: ActionKind::GoThrough {
                            door: door.id.clone(),
                        },
                        duration: through_s,
                    }],
                    moved(other, None),
                    t + through_s,
                ));
            }
        }

        let carried = self.extra_carried + n.objects.iter().filter(|o| **o == Obj::Carried).count();
        for (i, o) in n.objects.iter().enumerate() {
            let d = &self.goal.deliveries[i];
            let handling = self.robot.handling_s;
            let mut objects = n.objects.clone();
            let action = match o {
                Obj::AtStation if self.pickup_nodes[i] == n.loc && carried < self.robot.capacity => {
                    objects[i] = Obj::Carried;
                    ActionKind::Load {
                        object: d.object.clone(),
                    }
                }
                Obj::Carried if self.base_node == n.loc => {
                    objects[i] = Obj::Delivered;
                    ActionKind::Unload {
                        object: d.object.clone(),
                    }
                }
                _ => continue,
            };
            out.push((
                vec![Action {
                    kind: action,
                    duration: handling,
                }],
                Node {
                    loc: n.loc,
                    facing: None,
                    open: 0,
                    objects,
                    inherited: false,
                },
                t + handling,
            ));
        }
        out
    }

    fn solve(&self, now: f64) -> Result<PlanOutcome, PlanError> {
        let mut labels: Vec<Label> = vec![Label {
            node: self.start.clone(),
            time: now,
            actions: Vec::new(),
            keys: Vec::new(),
            alive: true,
        }];
        let mut frontier: HashMap<Node, Vec<usize>> = HashMap::new();
        frontier.insert(self.start.clone(), vec![0]);
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((time_key(now), 0usize, 0usize)));

        while let Some(Reverse((tk, n_actions, first_id))) = heap.pop() {
            // among queued labels with equal (time, length), expand the one
            // with the smallest action sequence first
            let mut tied = vec![first_id];
            while let Some(&Reverse((tk2, n2, id2))) = heap.peek() {
                if tk2 != tk || n2 != n_actions {
                    break;
                }
                heap.pop();
                tied.push(id2);
            }
            tied.retain(|&id| labels[id].alive);
            let Some(&id) = tied.iter().min_by(|&&a, &&b| labels[a].keys.cmp(&labels[b].keys)) else {
                continue;
            };
            for &other in tied.iter().filter(|&&o| o != id) {
                heap.push(Reverse((tk, n_actions, other)));
            }

            if self.is_goal(&labels[id].node) {
                let label = &labels[id];
                return Ok(PlanOutcome {
                    plan: Plan::new(label.actions.iter().cloned()),
                    finish: label.time,
                });
            }
            labels[id].alive = false;

            let node = labels[id].node.clone();
            let t = labels[id].time;
            let first = labels[id].actions.is_empty();
            for (acts, next, finish) in self.successors(&node, t, first) {
                let mut actions = labels[id].actions.clone();
                let mut keys = labels[id].keys.clone();
                for a in acts {
                    keys.push(a.key());
                    actions.push(a);
                }
                let beats = |time: f64, len: usize, k: &[ActionKey], l: &Label| {
                    time <= l.time + TIME_EPS && len <= l.actions.len() && k <= l.keys.as_slice()
                };
                let entry = frontier.entry(next.clone()).or_default();
                if entry.iter().any(|&e| {
                    let l = &labels[e];
                    l.time <= finish + TIME_EPS && l.actions.len() <= actions.len() && l.keys <= keys
                }) {
                    continue;
                }
                entry.retain(|&e| {
                    let beaten = beats(finish, actions.len(), &keys, &labels[e]);
                    if beaten {
                        labels[e].alive = false;
                    }
                    !beaten
                });
                let new_id = labels.len();
                entry.push(new_id);
                heap.push(Reverse((time_key(finish), actions.len(), new_id)));
                labels.push(Label {
                    node: next,
                    time: finish,
                    actions,
                    keys,
                    alive: true,
                });
                if labels.len() > SEARCH_LIMIT {
                    return Err(PlanError::SearchLimit { limit: SEARCH_LIMIT });
                }
            }
        }
        let subgoal = self
            .goal
            .deliveries
            .iter()
            .zip(&self.start.objects)
            .find(|(_, o)| **o != Obj::Delivered)
            .map(|(d, _)| format!("deliver `{}` from {} to {}", d.object, d.pickup, d.dropoff))
            .or_else(|| self.destination.map(|d| format!("reach `{}`", self.node_id(d))))
            .unwrap_or_else(|| "goal".to_string());
        Err(PlanError::Unreachable { subgoal })
    }
}

/// Times compared at microsecond resolution so float noise cannot split ties.
fn time_key(t: f64) -> i64 {
    (t * 1e6).round() as i64
}
