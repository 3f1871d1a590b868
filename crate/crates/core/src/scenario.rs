//! Scenario documents: JSON schema, validation and the built-in office3 layout.
//!
//! Schema (unknown keys are rejected at every level):
//!
//! ```text
//! {
//!   "name": "office3",
//!   "map": {
//!     "nodes":    [{"id": "B", "x": 0.0, "y": 0.0}, ...],
//!     "edges":    [{"from": "C1", "to": "D", "length": 2.0, "door": "D"}, ...],
//!     "doors":    [{"id": "D", "state": "closed", "assisted": true, "auto_close_after": 15.0}],
//!     "stations": [{"id": "L1", "node": "L1", "kind": "loading"}, ...]
//!   },
//!   "robots": [{"id": 0, "start": "C1", "speed": 0.6, "capacity": 1, "handling_s": 5.0}],
//!   "tasks":  [{"robot": 0, "deliveries": [{"object": "obj1", "pickup": "L1", "dropoff": "B"}]}],
//!   "human":  {"own_task_mean_s": 840.0, ...}
//! }
//! ```
//!
//! Edge `length` may be omitted, in which case the Euclidean distance is used.
//! Door `state`, `assisted` and `auto_close_after` default to closed, true and 15 s.
//! Robot `speed`, `capacity` and `handling_s` default to 0.6 m/s, 1 and 5 s.
//! Every `human` field is optional; see [`HumanParams`] for defaults.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Door, DoorState, Edge, Node, ObjectLocation, RobotSpec, Station, StationKind,
    TaskSpec, WorldError, WorldMap,
};
use crate::human::HumanParams;

pub const DEFAULT_SPEED: f64 = 0.6;
pub const DEFAULT_CAPACITY: usize = 1;
pub const DEFAULT_HANDLING_S: f64 = 5.0;
pub const DEFAULT_AUTO_CLOSE_S: f64 = 15.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("{path}: unknown reference `{id}`")]
    DanglingReference { path: String, id: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ScenarioError {
    /// Field path of the offending value, e.g. `map.edges[2].door`.
    pub fn path(&self) -> &str {
        match self {
            ScenarioError::Schema { path, .. }
            | ScenarioError::DanglingReference { path, .. }
            | ScenarioError::Invalid { path, .. } => path,
            ScenarioError::World(w) => w.path(),
        }
    }

    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default = "default_name")]
    name: String,
    map: MapDoc,
    #[serde(default)]
    robots: Vec<RobotDoc>,
    #[serde(default)]
    tasks: Vec<TaskSpec>,
    #[serde(default)]
    human: HumanParams,
}

fn default_name() -> String {
    "unnamed".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    nodes: Vec<Node>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    doors: Vec<DoorDoc>,
    #[serde(default)]
    stations: Vec<Station>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    door: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoorDoc {
    id: String,
    #[serde(default = "closed")]
    state: DoorState,
    #[serde(default = "yes")]
    assisted: bool,
    #[serde(default = "auto_close")]
    auto_close_after: f64,
}

fn closed() -> DoorState {
    DoorState::Closed
}
fn yes() -> bool {
    true
}
fn auto_close() -> f64 {
    DEFAULT_AUTO_CLOSE_S
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    id: usize,
    start: String,
    #[serde(default = "speed")]
    speed: f64,
    #[serde(default = "capacity")]
    capacity: usize,
    #[serde(default = "handling")]
    handling_s: f64,
}

fn speed() -> f64 {
    DEFAULT_SPEED
}
fn capacity() -> usize {
    DEFAULT_CAPACITY
}
fn handling() -> f64 {
    DEFAULT_HANDLING_S
}

/// A validated scenario: world, robots, one task per robot, and human parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub world: WorldMap,
    pub robots: Vec<RobotSpec>,
    /// `tasks[i]` belongs to robot `i`; robots without deliveries get an empty task.
    pub tasks: Vec<TaskSpec>,
    pub human: HumanParams,
}

impl Scenario {
    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    /// Initial location of every object (at its pickup station).
    pub fn initial_objects(&self) -> BTreeMap<String, ObjectLocation> {
        self.tasks
            .iter()
            .flat_map(|t| t.deliveries.iter())
            .map(|d| (d.object.clone(), ObjectLocation::Station(d.pickup.clone())))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc {
            name: self.name.clone(),
            map: MapDoc {
                nodes: self.world.nodes().to_vec(),
                edges: self
                    .world
                    .edges()
                    .iter()
                    .map(|e| EdgeDoc {
                        from: e.from.clone(),
                        to: e.to.clone(),
                        length: Some(e.length),
                        door: e.door.clone(),
                    })
                    .collect(),
                doors: self
                    .world
                    .doors()
                    .iter()
                    .map(|d| DoorDoc {
                        id: d.id.clone(),
                        state: d.state,
                        assisted: d.assisted,
                        auto_close_after: d.auto_close_after,
                    })
                    .collect(),
                stations: self.world.stations().to_vec(),
            },
            robots: self
                .robots
                .iter()
                .map(|r| RobotDoc {
                    id: r.id,
                    start: r.start.clone(),
                    speed: r.speed,
                    capacity: r.capacity,
                    handling_s: r.handling_s,
                })
                .collect(),
            tasks: self
                .tasks
                .iter()
                .filter(|t| !t.deliveries.is_empty())
                .cloned()
                .collect(),
            human: self.human.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }
}

/// Parse and validate a scenario document.
pub fn load_world(document: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Schema {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    build(doc)
}

fn build(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let positions: BTreeMap<&str, (f64, f64)> = doc
        .map
        .nodes
        .iter()
        .map(|n| (n.id.as_str(), (n.x, n.y)))
        .collect();
    let mut edges = Vec::with_capacity(doc.map.edges.len());
    for (i, e) in doc.map.edges.iter().enumerate() {
        let length = match e.length {
            Some(l) => l,
            None => {
                let a = positions.get(e.from.as_str()).ok_or_else(|| {
                    ScenarioError::DanglingReference {
                        path: format!("map.edges[{i}].from"),
                        id: e.from.clone(),
                    }
                })?;
                let b = positions.get(e.to.as_str()).ok_or_else(|| {
                    ScenarioError::DanglingReference {
                        path: format!("map.edges[{i}].to"),
                        id: e.to.clone(),
                    }
                })?;
                (a.0 - b.0).hypot(a.1 - b.1)
            }
        };
        edges.push(Edge {
            from: e.from.clone(),
            to: e.to.clone(),
            length,
            door: e.door.clone(),
        });
    }
    let doors = doc
        .map
        .doors
        .iter()
        .map(|d| Door {
            id: d.id.clone(),
            state: d.state,
            assisted: d.assisted,
            auto_close_after: d.auto_close_after,
        })
        .collect();
    let world = WorldMap::new(doc.map.nodes, edges, doors, doc.map.stations)?;

    let mut robots = Vec::with_capacity(doc.robots.len());
    for (i, r) in doc.robots.iter().enumerate() {
        if r.id != i {
            return Err(ScenarioError::invalid(
                format!("robots[{i}].id"),
                format!("robot ids must be 0..N-1 in order, found {}", r.id),
            ));
        }
        if world.node_idx(&r.start).is_none() {
            return Err(ScenarioError::DanglingReference {
                path: format!("robots[{i}].start"),
                id: r.start.clone(),
            });
        }
        if !(r.speed > 0.0) || !r.speed.is_finite() {
            return Err(ScenarioError::invalid(format!("robots[{i}].speed"), "must be > 0"));
        }
        if r.capacity == 0 {
            return Err(ScenarioError::invalid(format!("robots[{i}].capacity"), "must be >= 1"));
        }
        if !(r.handling_s > 0.0) {
            return Err(ScenarioError::invalid(format!("robots[{i}].handling_s"), "must be > 0"));
        }
        robots.push(RobotSpec {
            id: r.id,
            start: r.start.clone(),
            speed: r.speed,
            capacity: r.capacity,
            handling_s: r.handling_s,
        });
    }

    let mut tasks: Vec<TaskSpec> = (0..robots.len())
        .map(|robot| TaskSpec {
            robot,
            deliveries: Vec::new(),
        })
        .collect();
    let mut assigned = BTreeSet::new();
    let mut objects = BTreeSet::new();
    for (i, t) in doc.tasks.iter().enumerate() {
        if t.robot >= robots.len() {
            return Err(ScenarioError::DanglingReference {
                path: format!("tasks[{i}].robot"),
                id: t.robot.to_string(),
            });
        }
        if !assigned.insert(t.robot) {
            return Err(ScenarioError::invalid(
                format!("tasks[{i}].robot"),
                format!("robot {} already has a task", t.robot),
            ));
        }
        for (j, d) in t.deliveries.iter().enumerate() {
            let at = |field: &str| format!("tasks[{i}].deliveries[{j}].{field}");
            if !objects.insert(d.object.clone()) {
                return Err(ScenarioError::invalid(
                    at("object"),
                    format!("object `{}` appears in more than one delivery", d.object),
                ));
            }
            check_station(&world, &d.pickup, StationKind::Loading, at("pickup"))?;
            check_station(&world, &d.dropoff, StationKind::Base, at("dropoff"))?;
        }
        tasks[t.robot] = t.clone();
    }

    doc.human
        .validate()
        .map_err(|(field, message)| ScenarioError::invalid(format!("human.{field}"), message))?;

    Ok(Scenario {
        name: doc.name,
        world,
        robots,
        tasks,
        human: doc.human,
    })
}

fn check_station(
    world: &WorldMap,
    id: &str,
    kind: StationKind,
    path: String,
) -> Result<(), ScenarioError> {
    match world.station(id) {
        None => Err(ScenarioError::DanglingReference {
            path,
            id: id.to_string(),
        }),
        Some(s) if s.kind != kind => Err(ScenarioError::invalid(
            path,
            format!("station `{id}` is {:?}, expected {kind:?}", s.kind),
        )),
        Some(_) => Ok(()),
    }
}

/// Canonical office3 scenario document; identical to `scenarios/office3.json`.
pub const OFFICE3_JSON: &str = include_str!("../../../scenarios/office3.json");

/// The built-in three-robot office layout: base room B behind the assisted
/// door, corridor node C1 and loading stations L1..L3.
pub fn office3() -> Scenario {
    load_world(OFFICE3_JSON).expect("built-in office3 scenario is valid")
}
