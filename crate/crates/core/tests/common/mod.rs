#![allow(dead_code)]

pub mod path_oracle;
pub mod planner_oracle;

use std::collections::BTreeMap;

use arn_core::domain::{
    Delivery, Door, DoorState, Edge, Node, ObjectLocation, RobotSpec, Station, StationKind,
    SymbolicState, WorldMap,
};
use arn_core::constraints::{ConstraintSet, Window};
use arn_core::planner::{Goal, TeamMember};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random connected graph on distinct integer grid points.
pub fn random_graph(rng: &mut impl Rng, n: usize, extra_edges: usize) -> (Vec<Node>, Vec<Edge>) {
    let mut cells: Vec<(i32, i32)> = (0..6).flat_map(|x| (0..6).map(move |y| (x, y))).collect();
    cells.shuffle(rng);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: format!("n{i}"),
            x: f64::from(cells[i].0),
            y: f64::from(cells[i].1),
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    for _ in 0..extra_edges {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && !pairs.contains(&(a.min(b), a.max(b))) {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(a, b)| {
            let (na, nb) = (&nodes[a], &nodes[b]);
            Edge {
                from: na.id.clone(),
                to: nb.id.clone(),
                length: ((na.x - nb.x).powi(2) + (na.y - nb.y).powi(2)).sqrt(),
                door: None,
            }
        })
        .collect();
    (nodes, edges)
}

pub struct Instance {
    pub world: WorldMap,
    pub robot: RobotSpec,
    pub state: SymbolicState,
    pub goal: Goal,
}

/// A small delivery world: up to `max_nodes` nodes, one or two doors, a base and
/// two loading stations, and a robot with 0..=`max_deliveries` deliveries.
pub fn random_instance(seed: u64, max_nodes: usize, max_deliveries: usize) -> Instance {
    let mut rng = rng(seed);
    let n = rng.random_range(3..=max_nodes);
    let extra = rng.random_range(0..3);
    let (nodes, mut edges) = random_graph(&mut rng, n, extra);

    let n_doors = rng.random_range(1..=2.min(edges.len()));
    let mut which: Vec<usize> = (0..edges.len()).collect();
    which.shuffle(&mut rng);
    let mut doors = Vec::new();
    for (k, &e) in which.iter().take(n_doors).enumerate() {
        let id = format!("D{k}");
        edges[e].door = Some(id.clone());
        doors.push(Door {
            id,
            state: DoorState::Closed,
            assisted: rng.random_bool(0.7),
            auto_close_after: 15.0,
        });
    }

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let base = ids[0];
    let loading = [ids[1], ids[2]];
    let mut stations = vec![Station {
        id: "B".into(),
        node: nodes[base].id.clone(),
        kind: StationKind::Base,
    }];
    for (k, &l) in loading.iter().enumerate() {
        if l != base && !stations.iter().any(|s| s.node == nodes[l].id) {
            stations.push(Station {
                id: format!("L{k}"),
                node: nodes[l].id.clone(),
                kind: StationKind::Loading,
            });
        }
    }
    let world = WorldMap::new(nodes, edges, doors, stations).expect("generated world is valid");

    let loading: Vec<String> = world
        .stations()
        .iter()
        .filter(|s| s.kind == StationKind::Loading)
        .map(|s| s.id.clone())
        .collect();
    let k = rng.random_range(0..=max_deliveries);
    let deliveries: Vec<Delivery> = (0..k)
        .map(|i| Delivery {
            object: format!("o{i}"),
            pickup: loading[rng.random_range(0..loading.len())].clone(),
            dropoff: "B".into(),
        })
        .collect();
    let robot = RobotSpec {
        id: 0,
        start: world.nodes()[rng.random_range(0..n)].id.clone(),
        speed: [0.5, 0.6, 1.0][rng.random_range(0..3)],
        capacity: rng.random_range(1..=2),
        handling_s: 5.0,
    };
    let objects: BTreeMap<String, ObjectLocation> = deliveries
        .iter()
        .map(|d| (d.object.clone(), ObjectLocation::Station(d.pickup.clone())))
        .collect();
    let state = SymbolicState {
        robot_location: robot.start.clone(),
        facing_door: None,
        door_states: world.initial_door_states(),
        object_locations: objects,
        step_index: 0,
    };
    Instance {
        world,
        robot,
        state,
        goal: Goal {
            deliveries,
            destination: None,
        },
    }
}

/// A random team on a random world, with busy windows around `now`.
pub fn random_team(seed: u64) -> (WorldMap, Vec<TeamMember>, ConstraintSet) {
    let inst = random_instance(seed, 8, 0);
    let mut rng = rng(seed ^ 0x5EED);
    let w = inst.world;
    let loading: Vec<String> = w
        .stations()
        .iter()
        .filter(|s| s.kind == StationKind::Loading)
        .map(|s| s.id.clone())
        .collect();
    let n = rng.random_range(1..=3);
    let now = rng.random_range(0.0..100.0_f64).round();
    let goals: Vec<Goal> = (0..n)
        .map(|i| Goal {
            deliveries: if rng.random_bool(0.8) {
                vec![Delivery {
                    object: format!("o{i}"),
                    pickup: loading[rng.random_range(0..loading.len())].clone(),
                    dropoff: "B".into(),
                }]
            } else {
                Vec::new()
            },
            destination: None,
        })
        .collect();
    let objects: BTreeMap<String, ObjectLocation> = goals
        .iter()
        .flat_map(|g| g.deliveries.iter())
        .map(|d| (d.object.clone(), ObjectLocation::Station(d.pickup.clone())))
        .collect();
    let members = goals
        .into_iter()
        .enumerate()
        .map(|(i, goal)| {
            let start = w.nodes()[rng.random_range(0..w.nodes().len())].id.clone();
            TeamMember {
                robot: RobotSpec {
                    id: i,
                    start: start.clone(),
                    speed: 0.6,
                    capacity: 1,
                    handling_s: 5.0,
                },
                state: SymbolicState {
                    robot_location: start,
                    facing_door: None,
                    door_states: w.initial_door_states(),
                    object_locations: objects.clone(),
                    step_index: 0,
                },
                goal,
                start: now,
            }
        })
        .collect();
    let k = rng.random_range(1..=2);
    let c = ConstraintSet::new((0..k).map(|_| {
        let s = now + rng.random_range(-60.0..120.0_f64);
        Window::new(s, s + [120.0, 240.0][rng.random_range(0..2)])
    }));
    (w, members, c)
}
