//! Metric layer: routes on the waypoint graph and pose evolution along them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::domain::{Pose, WorldMap};
use crate::planner::{Action, ActionKind, Target};

/// A pose must be this close to a trajectory to be tracked along it.
pub const TRACKING_TOLERANCE_M: f64 = 1e-6;
const DIST_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown door `{0}`")]
    UnknownDoor(String),
    #[error("no route from `{from}` to `{to}`")]
    Unreachable { from: String, to: String },
    #[error("pose ({x:.3}, {y:.3}) is {distance:.3e} m off the trajectory")]
    OffTrajectory { x: f64, y: f64, distance: f64 },
}

/// Polyline `[L1, .., LM]`; never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<(f64, f64)>,
    /// Arc length at each point.
    cumulative: Vec<f64>,
}

impl Trajectory {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        assert!(!points.is_empty(), "a trajectory has at least one point");
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                let q = points[i - 1];
                acc += (p.0 - q.0).hypot(p.1 - q.1);
            }
            cumulative.push(acc);
        }
        Trajectory { points, cumulative }
    }

    pub fn stationary(x: f64, y: f64) -> Self {
        Trajectory::new(vec![(x, y)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn start(&self) -> (f64, f64) {
        self.points[0]
    }

    pub fn end(&self) -> (f64, f64) {
        *self.points.last().unwrap()
    }

    /// Position and segment heading at arc length `s` (clamped to the ends).
    /// At a vertex the outgoing segment's heading is used; `None` when the
    /// trajectory has no extent.
    pub fn at(&self, s: f64) -> ((f64, f64), Option<f64>) {
        let s = s.clamp(0.0, self.length());
        let n = self.points.len();
        // last segment whose start is <= s, skipping zero-length segments
        let mut seg = None;
        for i in 0..n.saturating_sub(1) {
            if self.cumulative[i + 1] - self.cumulative[i] <= DIST_EPS {
                continue;
            }
            if self.cumulative[i] <= s + DIST_EPS {
                seg = Some(i);
            }
        }
        let Some(i) = seg else {
            return (self.points[0], None);
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let len = self.cumulative[i + 1] - self.cumulative[i];
        let f = ((s - self.cumulative[i]) / len).clamp(0.0, 1.0);
        let heading = (b.1 - a.1).atan2(b.0 - a.0);
        let pos = if f >= 1.0 { b } else { (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1)) };
        (pos, Some(heading))
    }

    /// Arc length of the first point on the polyline within tolerance of `(x, y)`.
    pub fn locate(&self, x: f64, y: f64) -> Result<f64, MotionError> {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            let a = self.points[i];
            if self.points.len() == 1 {
                best = best.min((x - a.0).hypot(y - a.1));
                if best <= TRACKING_TOLERANCE_M {
                    return Ok(0.0);
                }
                break;
            }
            if i + 1 == self.points.len() {
                break;
            }
            let b = self.points[i + 1];
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let f = if len2 == 0.0 {
                0.0
            } else {
                (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0)
            };
            let (px, py) = (a.0 + f * dx, a.1 + f * dy);
            let d = (x - px).hypot(y - py);
            if d <= TRACKING_TOLERANCE_M {
                return Ok(self.cumulative[i] + f * len2.sqrt());
            }
            best = best.min(d);
        }
        Err(MotionError::OffTrajectory { x, y, distance: best })
    }
}

#[derive(PartialEq)]
struct Item {
    dist: f64,
    path: Vec<usize>,
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other.dist.total_cmp(&self.dist).then_with(|| other.path.cmp(&self.path))
    }
}

/// Better of two paths: shorter, or equally long and lexicographically smaller by node id.
fn better(world: &WorldMap, d1: f64, p1: &[usize], d2: f64, p2: &[usize]) -> bool {
    if (d1 - d2).abs() > DIST_EPS {
        return d1 < d2;
    }
    let ids = |p: &[usize]| p.iter().map(|&i| world.nodes()[i].id.as_str()).collect::<Vec<_>>();
    ids(p1) < ids(p2)
}

fn dijkstra(world: &WorldMap, from: usize, to: usize, door_free: bool) -> Option<Vec<usize>> {
    let n = world.nodes().len();
    let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
    let mut settled = vec![false; n];
    best[from] = Some((0.0, vec![from]));
    let mut heap = BinaryHeap::new();
    heap.push(Item {
        dist: 0.0,
        path: vec![from],
    });
    while let Some(Item { dist, path }) = heap.pop() {
        let u = *path.last().unwrap();
        if settled[u] {
            continue;
        }
        match &best[u] {
            Some((d, p)) if *d == dist && *p == path => {}
            _ => continue,
        }
        settled[u] = true;
        if u == to {
            return Some(path);
        }
        for &(v, e) in world.neighbors(u) {
            let edge = &world.edges()[e];
            if settled[v] || (door_free && edge.door.is_some()) {
                continue;
            }
            let nd = dist + edge.length;
            let mut np = path.clone();
            np.push(v);
            let improve = match &best[v] {
                None => true,
                Some((d, p)) => better(world, nd, &np, *d, p),
            };
            if improve {
                best[v] = Some((nd, np.clone()));
                heap.push(Item { dist: nd, path: np });
            }
        }
    }
    None
}

fn node(world: &WorldMap, id: &str) -> Result<usize, MotionError> {
    world
        .node_idx(id)
        .ok_or_else(|| MotionError::UnknownNode(id.to_string()))
}

/// Shortest path by summed edge length; ties go to the lexicographically
/// smallest node-id sequence.
pub fn shortest_path(world: &WorldMap, from: &str, to: &str) -> Result<Vec<String>, MotionError> {
    shortest_path_idx(world, node(world, from)?, node(world, to)?, false).map(|p| ids(world, &p))
}

fn ids(world: &WorldMap, path: &[usize]) -> Vec<String> {
    path.iter().map(|&i| world.nodes()[i].id.clone()).collect()
}

fn shortest_path_idx(
    world: &WorldMap,
    from: usize,
    to: usize,
    door_free: bool,
) -> Result<Vec<usize>, MotionError> {
    dijkstra(world, from, to, door_free).ok_or_else(|| MotionError::Unreachable {
        from: world.nodes()[from].id.clone(),
        to: world.nodes()[to].id.clone(),
    })
}

/// Within one room this stays off door edges, as a planned approach does;
/// otherwise any edge may be used.
fn travel(world: &WorldMap, from: usize, to: usize) -> Result<Vec<usize>, MotionError> {
    let same_room = world.room_of(from) == world.room_of(to);
    shortest_path_idx(world, from, to, same_room)
}

fn polyline(world: &WorldMap, path: &[usize]) -> Trajectory {
    Trajectory::new(
        path.iter()
            .map(|&i| (world.nodes()[i].x, world.nodes()[i].y))
            .collect(),
    )
}

/// Metric trajectory realizing `action` from `from`. Non-motion actions give a
/// single point at the node.
pub fn route(action: &Action, from: &str, world: &WorldMap) -> Result<Trajectory, MotionError> {
    let start = node(world, from)?;
    match &action.kind {
        ActionKind::Approach { target } => {
            let goal = match target {
                Target::Node(n) => node(world, n)?,
                Target::Door(d) => {
                    let di = world
                        .door_idx(d)
                        .ok_or_else(|| MotionError::UnknownDoor(d.clone()))?;
                    match world.door_side(di, start) {
                        Some(side) => side,
                        None => {
                            // door of another room: nearer endpoint over the whole graph
                            let (a, b) = world.door_endpoints(di);
                            let pa = shortest_path_idx(world, start, a, false)?;
                            let pb = shortest_path_idx(world, start, b, false)?;
                            let len = |p: &[usize]| polyline(world, p).length();
                            if better(world, len(&pb), &pb, len(&pa), &pa) {
                                b
                            } else {
                                a
                            }
                        }
                    }
                }
            };
            Ok(polyline(world, &travel(world, start, goal)?))
        }
        ActionKind::GoThrough { door } => {
            let di = world
                .door_idx(door)
                .ok_or_else(|| MotionError::UnknownDoor(door.clone()))?;
            let (a, b) = world.door_endpoints(di);
            let other = if a == start { b } else { a };
            Ok(polyline(world, &[start, other]))
        }
        _ => Ok(polyline(world, &[start])),
    }
}

/// Moves `speed * dt` farther along the trajectory from `pose` (clamped at the
/// end). Returns the new pose and the fraction of arc length covered.
pub fn advance_pose(
    pose: Pose,
    trajectory: &Trajectory,
    speed: f64,
    dt: f64,
) -> Result<(Pose, f64), MotionError> {
    assert!(speed > 0.0 && dt > 0.0, "speed and dt must be positive");
    let s = trajectory.locate(pose.x, pose.y)?;
    let total = trajectory.length();
    if total == 0.0 {
        return Ok((pose, 1.0));
    }
    let s2 = (s + speed * dt).min(total);
    let ((x, y), heading) = trajectory.at(s2);
    let heading = match heading {
        Some(h) => h,
        None => pose.heading,
    };
    Ok((Pose::new(x, y, heading), s2 / total))
}

/// Node ids visited by a trajectory, if every point is a node.
pub fn trajectory_nodes(world: &WorldMap, trajectory: &Trajectory) -> Option<Vec<String>> {
    trajectory
        .points()
        .iter()
        .map(|&(x, y)| {
            let (i, d) = world.nearest_node(x, y);
            (d <= TRACKING_TOLERANCE_M).then(|| world.nodes()[i].id.clone())
        })
        .collect()
}
