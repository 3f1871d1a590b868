//! Environment, robots, tasks and the symbolic state the planner works on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A robot closer than this to a node is considered to be at that node.
pub const SNAP_THRESHOLD_M: f64 = 0.25;
/// Allowed mismatch between a declared edge length and the node distance.
pub const LENGTH_TOLERANCE_M: f64 = 1e-6;
/// Angular tolerance for "oriented toward a door".
const FACING_TOLERANCE_RAD: f64 = PI / 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorState {
    Open,
    Closed,
}

impl fmt::Display for DoorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DoorState::Open => f.write_str("open"),
            DoorState::Closed => f.write_str("closed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub id: String,
    pub state: DoorState,
    /// Only the human can open an assisted door.
    pub assisted: bool,
    /// Seconds an opened door stays open.
    pub auto_close_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationKind {
    Loading,
    Base,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    pub id: String,
    pub node: String,
    pub kind: StationKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: unknown reference `{id}`")]
    DanglingReference { path: String, id: String },
    #[error("map.edges: graph is disconnected, node `{unreachable}` cannot be reached from `{root}`")]
    Disconnected { root: String, unreachable: String },
}

impl WorldError {
    pub fn path(&self) -> &str {
        match self {
            WorldError::Invalid { path, .. } | WorldError::DanglingReference { path, .. } => path,
            WorldError::Disconnected { .. } => "map.edges",
        }
    }

    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        WorldError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Waypoint graph with doors and stations. Immutable once built.
#[derive(Debug, Clone)]
pub struct WorldMap {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    doors: Vec<Door>,
    stations: Vec<Station>,
    node_index: BTreeMap<String, usize>,
    door_index: BTreeMap<String, usize>,
    /// node -> (neighbor, edge index), sorted by neighbor id.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// door index -> edge index
    door_edges: Vec<usize>,
    /// Connected component of each node when door edges are removed.
    rooms: Vec<usize>,
    /// Shortest distances over door-free edges (infinite across rooms).
    room_distances: Vec<Vec<f64>>,
}

impl PartialEq for WorldMap {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.doors == other.doors
            && self.stations == other.stations
    }
}

impl WorldMap {
    pub fn new(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        doors: Vec<Door>,
        stations: Vec<Station>,
    ) -> Result<Self, WorldError> {
        let mut node_index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.id.is_empty() {
                return Err(WorldError::invalid(format!("map.nodes[{i}].id"), "empty id"));
            }
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(WorldError::invalid(
                    format!("map.nodes[{i}]"),
                    "coordinates must be finite",
                ));
            }
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(WorldError::invalid(
                    format!("map.nodes[{i}].id"),
                    format!("duplicate node id `{}`", n.id),
                ));
            }
        }
        if nodes.is_empty() {
            return Err(WorldError::invalid("map.nodes", "at least one node is required"));
        }

        let mut door_index = BTreeMap::new();
        for (i, d) in doors.iter().enumerate() {
            if door_index.insert(d.id.clone(), i).is_some() {
                return Err(WorldError::invalid(
                    format!("map.doors[{i}].id"),
                    format!("duplicate door id `{}`", d.id),
                ));
            }
            if !(d.auto_close_after > 0.0) {
                return Err(WorldError::invalid(
                    format!("map.doors[{i}].auto_close_after"),
                    "must be > 0",
                ));
            }
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut door_edges = vec![usize::MAX; doors.len()];
        for (i, e) in edges.iter().enumerate() {
            let a = *node_index.get(&e.from).ok_or_else(|| WorldError::DanglingReference {
                path: format!("map.edges[{i}].from"),
                id: e.from.clone(),
            })?;
            let b = *node_index.get(&e.to).ok_or_else(|| WorldError::DanglingReference {
                path: format!("map.edges[{i}].to"),
                id: e.to.clone(),
            })?;
            if a == b {
                return Err(WorldError::invalid(format!("map.edges[{i}]"), "self-loop"));
            }
            if !(e.length > 0.0) {
                return Err(WorldError::invalid(format!("map.edges[{i}].length"), "must be > 0"));
            }
            let euclid = distance(&nodes[a], &nodes[b]);
            if (e.length - euclid).abs() > LENGTH_TOLERANCE_M {
                return Err(WorldError::invalid(
                    format!("map.edges[{i}].length"),
                    format!("length {} differs from node distance {euclid}", e.length),
                ));
            }
            if adjacency[a].iter().any(|&(n, _)| n == b) {
                return Err(WorldError::invalid(
                    format!("map.edges[{i}]"),
                    format!("duplicate edge {}-{}", e.from, e.to),
                ));
            }
            if let Some(door) = &e.door {
                let d = *door_index.get(door).ok_or_else(|| WorldError::DanglingReference {
                    path: format!("map.edges[{i}].door"),
                    id: door.clone(),
                })?;
                if door_edges[d] != usize::MAX {
                    return Err(WorldError::invalid(
                        format!("map.edges[{i}].door"),
                        format!("door `{door}` is already attached to another edge"),
                    ));
                }
                door_edges[d] = i;
            }
            adjacency[a].push((b, i));
            adjacency[b].push((a, i));
        }
        if let Some(d) = door_edges.iter().position(|&e| e == usize::MAX) {
            return Err(WorldError::invalid(
                format!("map.doors[{d}]"),
                format!("door `{}` is not attached to any edge", doors[d].id),
            ));
        }
        for list in &mut adjacency {
            list.sort_by(|x, y| nodes[x.0].id.cmp(&nodes[y.0].id));
        }

        let mut base_count = 0;
        let mut station_ids = BTreeSet::new();
        for (i, s) in stations.iter().enumerate() {
            if !node_index.contains_key(&s.node) {
                return Err(WorldError::DanglingReference {
                    path: format!("map.stations[{i}].node"),
                    id: s.node.clone(),
                });
            }
            if !station_ids.insert(s.id.clone()) {
                return Err(WorldError::invalid(
                    format!("map.stations[{i}].id"),
                    format!("duplicate station id `{}`", s.id),
                ));
            }
            if s.kind == StationKind::Base {
                base_count += 1;
            }
        }
        if base_count != 1 {
            return Err(WorldError::invalid(
                "map.stations",
                format!("exactly one base station is required, found {base_count}"),
            ));
        }

        // connectivity by flood fill over every edge
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(WorldError::Disconnected {
                root: nodes[0].id.clone(),
                unreachable: nodes[u].id.clone(),
            });
        }

        let mut world = WorldMap {
            nodes,
            edges,
            doors,
            stations,
            node_index,
            door_index,
            adjacency,
            door_edges,
            rooms: Vec::new(),
            room_distances: Vec::new(),
        };
        world.rooms = world.compute_rooms();
        world.room_distances = world.compute_room_distances();
        Ok(world)
    }

    fn compute_rooms(&self) -> Vec<usize> {
        let mut room = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for start in 0..self.nodes.len() {
            if room[start] != usize::MAX {
                continue;
            }
            room[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                for &(m, e) in &self.adjacency[n] {
                    if self.edges[e].door.is_none() && room[m] == usize::MAX {
                        room[m] = next;
                        queue.push_back(m);
                    }
                }
            }
            next += 1;
        }
        room
    }

    fn compute_room_distances(&self) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in &self.edges {
            if e.door.is_none() {
                let a = self.node_index[&e.from];
                let b = self.node_index[&e.to];
                d[a][b] = d[a][b].min(e.length);
                d[b][a] = d[b][a].min(e.length);
            }
        }
        for k in 0..n {
            for i in 0..n {
                if d[i][k].is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn doors(&self) -> &[Door] {
        &self.doors
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn node_idx(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.node_idx(id).map(|i| &self.nodes[i])
    }

    pub fn door_idx(&self, id: &str) -> Option<usize> {
        self.door_index.get(id).copied()
    }

    pub fn door(&self, id: &str) -> Option<&Door> {
        self.door_idx(id).map(|i| &self.doors[i])
    }

    /// Neighbors of a node as (neighbor index, edge index), sorted by neighbor id.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    /// The two node indices joined by a door's edge, in declaration order.
    pub fn door_endpoints(&self, door: usize) -> (usize, usize) {
        let e = &self.edges[self.door_edges[door]];
        (self.node_index[&e.from], self.node_index[&e.to])
    }

    pub fn door_edge(&self, door: usize) -> &Edge {
        &self.edges[self.door_edges[door]]
    }

    pub fn station(&self, id: &str) -> Option<&Station> {
        self.stations.iter().find(|s| s.id == id)
    }

    pub fn base_station(&self) -> &Station {
        self.stations
            .iter()
            .find(|s| s.kind == StationKind::Base)
            .expect("validated: exactly one base station")
    }

    /// Room (door-free connected component) a node belongs to.
    pub fn room_of(&self, node: usize) -> usize {
        self.rooms[node]
    }

    /// Shortest distance between two nodes without crossing a door.
    pub fn room_distance(&self, a: usize, b: usize) -> f64 {
        self.room_distances[a][b]
    }

    /// The endpoint of a door's edge on the same side as `node`, if any.
    /// When both endpoints share the room, the nearer one wins (ties by id).
    pub fn door_side(&self, door: usize, node: usize) -> Option<usize> {
        let (a, b) = self.door_endpoints(door);
        let room = self.rooms[node];
        match (self.rooms[a] == room, self.rooms[b] == room) {
            (true, false) => Some(a),
            (false, true) => Some(b),
            (false, false) => None,
            (true, true) => {
                let da = self.room_distance(node, a);
                let db = self.room_distance(node, b);
                if da < db || (da == db && self.nodes[a].id <= self.nodes[b].id) {
                    Some(a)
                } else {
                    Some(b)
                }
            }
        }
    }

    /// Nearest node to a point, with its distance.
    pub fn nearest_node(&self, x: f64, y: f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = ((n.x - x).powi(2) + (n.y - y).powi(2)).sqrt();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    pub fn initial_door_states(&self) -> BTreeMap<String, DoorState> {
        self.doors.iter().map(|d| (d.id.clone(), d.state)).collect()
    }

    /// Nodes reachable from `start` over all edges (flood fill).
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }
}

pub fn distance(a: &Node, b: &Node) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Wrap an angle into [-pi, pi).
pub fn normalize_heading(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi) - PI;
    if t >= PI {
        t -= two_pi;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_heading(heading),
        }
    }

    pub fn at_node(node: &Node) -> Self {
        Pose::new(node.x, node.y, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobotStatus {
    Idle,
    Moving,
    WaitingAtDoor,
    Done,
}

impl fmt::Display for RobotStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotStatus::Idle => "idle",
            RobotStatus::Moving => "moving",
            RobotStatus::WaitingAtDoor => "waiting-at-door",
            RobotStatus::Done => "done",
        })
    }
}

/// Static per-robot parameters from the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub id: usize,
    pub start: String,
    pub speed: f64,
    pub capacity: usize,
    /// Seconds per load or unload.
    pub handling_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub id: usize,
    pub pose: Pose,
    pub carried: BTreeSet<String>,
    pub location: String,
    pub status: RobotStatus,
}

impl RobotState {
    pub fn at_start(spec: &RobotSpec, world: &WorldMap) -> Self {
        let node = world.node(&spec.start).expect("validated start node");
        RobotState {
            id: spec.id,
            pose: Pose::at_node(node),
            carried: BTreeSet::new(),
            location: spec.start.clone(),
            status: RobotStatus::Idle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Delivery {
    pub object: String,
    pub pickup: String,
    pub dropoff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub robot: usize,
    pub deliveries: Vec<Delivery>,
}

/// Where an object currently is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectLocation {
    Station(String),
    Robot(usize),
    Base,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicState {
    pub robot_location: String,
    pub facing_door: Option<String>,
    pub door_states: BTreeMap<String, DoorState>,
    pub object_locations: BTreeMap<String, ObjectLocation>,
    pub step_index: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("robot {robot} is moving; symbolic state is undefined mid-edge")]
    Moving { robot: usize },
    #[error("robot {robot} at ({x:.3}, {y:.3}) is {distance:.3} m from the nearest node `{nearest}`")]
    OffGraph {
        robot: usize,
        x: f64,
        y: f64,
        nearest: String,
        distance: f64,
    },
}

/// Project a robot's metric state onto the discrete state the planner uses.
pub fn symbolic_state(
    world: &WorldMap,
    robot: &RobotState,
    objects: &BTreeMap<String, ObjectLocation>,
    doors: &BTreeMap<String, DoorState>,
) -> Result<SymbolicState, ProjectionError> {
    if robot.status == RobotStatus::Moving {
        return Err(ProjectionError::Moving { robot: robot.id });
    }
    let (node, dist) = world.nearest_node(robot.pose.x, robot.pose.y);
    if dist > SNAP_THRESHOLD_M {
        return Err(ProjectionError::OffGraph {
            robot: robot.id,
            x: robot.pose.x,
            y: robot.pose.y,
            nearest: world.nodes()[node].id.clone(),
            distance: dist,
        });
    }

    let here = &world.nodes()[node];
    let mut facing = None;
    for (d, door) in world.doors().iter().enumerate() {
        let (a, b) = world.door_endpoints(d);
        let other = if a == node {
            b
        } else if b == node {
            a
        } else {
            continue;
        };
        let there = &world.nodes()[other];
        let bearing = (there.y - here.y).atan2(there.x - here.x);
        let diff = normalize_heading(bearing - robot.pose.heading).abs();
        if diff <= FACING_TOLERANCE_RAD {
            facing = Some(door.id.clone());
            break;
        }
    }

    let mut object_locations = objects.clone();
    for obj in &robot.carried {
        object_locations.insert(obj.clone(), ObjectLocation::Robot(robot.id));
    }

    Ok(SymbolicState {
        robot_location: here.id.clone(),
        facing_door: facing,
        door_states: doors.clone(),
        object_locations,
        step_index: 0,
    })
}
