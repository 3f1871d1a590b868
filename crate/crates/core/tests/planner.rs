mod common;

use std::collections::BTreeMap;

use arn_core::constraints::{ConstraintSet, Window, TIME_EPS};
use arn_core::domain::{DoorState, ObjectLocation, RobotSpec, SymbolicState};
use arn_core::planner::{
    assisted_traversal_starts, estimate_completion, plan_single, plan_team, schedule, simulate_plan,
    ActionKind, Goal, Plan, TeamMember,
};
use arn_core::scenario::office3;
use proptest::prelude::*;
use rand::Rng;

fn office_state(at: &str, objects: &[(&str, ObjectLocation)]) -> SymbolicState {
    let s = office3();
    SymbolicState {
        robot_location: at.into(),
        facing_door: None,
        door_states: s.world.initial_door_states(),
        object_locations: objects.iter().map(|(o, l)| (o.to_string(), l.clone())).collect(),
        step_index: 0,
    }
}

fn station(id: &str) -> ObjectLocation {
    ObjectLocation::Station(id.into())
}

fn delivery(object: &str, pickup: &str) -> arn_core::domain::Delivery {
    arn_core::domain::Delivery {
        object: object.into(),
        pickup: pickup.into(),
        dropoff: "B".into(),
    }
}

#[test]
fn door_plan_has_the_approach_open_gothrough_shape() {
    let s = office3();
    let state = office_state("D", &[]);
    let out = plan_single(&state, &Goal::reach("C1"), &s.robots[0], &s.world, &ConstraintSet::empty(), 0.0).unwrap();
    assert_eq!(out.plan.labels(), ["approach(D)", "opendoor(D)", "gothrough(D)"]);
}

#[test]
fn satisfied_goal_gives_empty_plan() {
    let s = office3();
    let state = office_state("B", &[("obj1", ObjectLocation::Base)]);
    let goal = Goal {
        deliveries: vec![delivery("obj1", "L1")],
        destination: None,
    };
    let out = plan_single(&state, &goal, &s.robots[0], &s.world, &ConstraintSet::empty(), 5.0).unwrap();
    assert!(out.plan.is_empty());
    assert_eq!(out.finish, 5.0);
}

#[test]
fn single_delivery_from_the_corridor() {
    let s = office3();
    let state = office_state("C1", &[("obj1", station("L2"))]);
    let goal = Goal {
        deliveries: vec![delivery("obj1", "L2")],
        destination: None,
    };
    let out = plan_single(&state, &goal, &s.robots[0], &s.world, &ConstraintSet::empty(), 0.0).unwrap();
    assert_eq!(
        out.plan.labels(),
        ["approach(L2)", "load(obj1)", "approach(D)", "opendoor(D)", "gothrough(D)", "approach(B)", "unload(obj1)"]
    );
}

#[test]
fn busy_window_puts_the_second_pickup_before_the_door() {
    let s = office3();
    let mut robot = s.robots[0].clone();
    robot.capacity = 2;
    let state = office_state("C1", &[("obj1", station("L2")), ("obj2", station("L1"))]);
    let goal = Goal {
        deliveries: vec![delivery("obj1", "L2"), delivery("obj2", "L1")],
        destination: None,
    };
    let c = ConstraintSet::single(0.0, 240.0);
    let out = plan_single(&state, &goal, &robot, &s.world, &c, 0.0).unwrap();
    let labels = out.plan.labels();
    let load2 = labels.iter().position(|l| l == "load(obj2)").unwrap();
    let open = labels.iter().position(|l| l == "opendoor(D)").unwrap();
    assert!(load2 < open, "{labels:?}");
    let times = schedule(&out.plan, 0.0, &c);
    assert!(times[open].0 >= 240.0);
    assert!((estimate_completion(&out.plan, 0.0, &c) - out.finish).abs() < 1e-9);
}

#[test]
fn open_door_inside_a_window_is_requested_again_afterwards() {
    let s = office3();
    let mut state = office_state("D", &[("obj1", station("L1"))]);
    state.facing_door = Some("D".into());
    state.door_states.insert("D".into(), DoorState::Open);
    let goal = Goal {
        deliveries: vec![delivery("obj1", "L1")],
        destination: None,
    };
    let c = ConstraintSet::single(0.0, 120.0);
    let out = plan_single(&state, &goal, &s.robots[0], &s.world, &c, 4.0).unwrap();
    assert_eq!(out.plan.labels()[..3], ["wait(116.0)", "opendoor(D)", "gothrough(D)"]);
    // outside the window the open door is used straight away
    let out = plan_single(&state, &goal, &s.robots[0], &s.world, &c, 130.0).unwrap();
    assert_eq!(out.plan.labels()[0], "gothrough(D)");
}

#[test]
fn unknown_object_is_reported_with_the_subgoal() {
    let s = office3();
    let state = office_state("C1", &[]);
    let goal = Goal {
        deliveries: vec![delivery("ghost", "L1")],
        destination: None,
    };
    let err = plan_single(&state, &goal, &s.robots[0], &s.world, &ConstraintSet::empty(), 0.0).unwrap_err();
    assert!(err.to_string().contains("ghost"), "{err}");
}

fn office_team(constraints: &ConstraintSet) -> (Vec<TeamMember>, Vec<Plan>) {
    let s = office3();
    let objects: BTreeMap<String, ObjectLocation> = s.initial_objects();
    let members: Vec<TeamMember> = s
        .robots
        .iter()
        .zip(&s.tasks)
        .map(|(r, t)| TeamMember {
            robot: r.clone(),
            state: SymbolicState {
                robot_location: r.start.clone(),
                facing_door: None,
                door_states: s.world.initial_door_states(),
                object_locations: objects.clone(),
                step_index: 0,
            },
            goal: Goal::from_task(t),
            start: 0.0,
        })
        .collect();
    let team = plan_team(&members, &s.world, constraints).unwrap();
    (members, team.plans)
}

#[test]
fn office_team_reservations_do_not_overlap() {
    let s = office3();
    let (members, plans) = office_team(&ConstraintSet::empty());
    assert_eq!(plans.len(), 3);
    let team = plan_team(&members, &s.world, &ConstraintSet::empty()).unwrap();
    let all: Vec<_> = team.reservations.iter().flatten().collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            assert!(!(a.start < b.end - TIME_EPS && b.start < a.end - TIME_EPS), "{a:?} overlaps {b:?}");
        }
    }
    for (m, p) in members.iter().zip(&plans) {
        let shape: Vec<&str> = p.iter().filter(|a| !matches!(a.kind, ActionKind::Wait { .. })).map(|a| a.name()).collect();
        assert_eq!(
            shape,
            ["approach", "opendoor", "gothrough", "approach", "load", "approach", "opendoor", "gothrough", "approach", "unload"],
            "robot {}",
            m.robot.id
        );
    }
}

#[test]
fn team_of_one_matches_plan_single() {
    let s = office3();
    let (members, _) = office_team(&ConstraintSet::empty());
    let m = &members[1];
    let team = plan_team(std::slice::from_ref(m), &s.world, &ConstraintSet::empty()).unwrap();
    let single = plan_single(&m.state, &m.goal, &m.robot, &s.world, &ConstraintSet::empty(), 0.0).unwrap();
    assert_eq!(team.plans[0], single.plan);
    assert!(plan_team(&[], &s.world, &ConstraintSet::empty()).unwrap().plans.is_empty());
}

/// Random instance with a perturbed start: maybe facing a door, doors maybe
/// open, objects maybe already carried or delivered.
fn perturbed(seed: u64) -> (common::Instance, ConstraintSet, f64) {
    let mut inst = common::random_instance(seed, 8, 2);
    let mut rng = common::rng(seed.wrapping_mul(31).wrapping_add(7));
    let now = rng.random_range(0.0..100.0_f64).round();
    let k = rng.random_range(0..=2);
    let constraints = ConstraintSet::new((0..k).map(|_| {
        let s = rng.random_range(-50.0..200.0_f64).round();
        Window::new(s, s + [120.0, 240.0][rng.random_range(0..2)])
    }));
    let w = &inst.world;
    let here = w.node_idx(&inst.state.robot_location).unwrap();
    let adjacent: Vec<usize> = (0..w.doors().len())
        .filter(|&d| {
            let (a, b) = w.door_endpoints(d);
            a == here || b == here
        })
        .collect();
    if !adjacent.is_empty() && rng.random_bool(0.5) {
        let d = adjacent[rng.random_range(0..adjacent.len())];
        inst.state.facing_door = Some(w.doors()[d].id.clone());
        if rng.random_bool(0.5) {
            inst.state.door_states.insert(w.doors()[d].id.clone(), DoorState::Open);
        }
    }
    let mut carried = 0;
    for d in &inst.goal.deliveries {
        let roll = rng.random_range(0..3);
        if roll == 1 && carried < inst.robot.capacity {
            carried += 1;
            inst.state.object_locations.insert(d.object.clone(), ObjectLocation::Robot(0));
        } else if roll == 2 {
            inst.state.object_locations.insert(d.object.clone(), ObjectLocation::Base);
        }
    }
    (inst, constraints, now)
}

fn robot_of(inst: &common::Instance) -> &RobotSpec {
    &inst.robot
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn returned_plans_are_valid(seed in any::<u64>()) {
        let (inst, c, now) = perturbed(seed);
        let out = plan_single(&inst.state, &inst.goal, robot_of(&inst), &inst.world, &c, now).unwrap();
        let states = simulate_plan(&inst.world, &inst.robot, &inst.state, &out.plan)
            .map_err(|e| TestCaseError::fail(format!("{e}")))?;
        prop_assert!(inst.goal.is_satisfied(states.last().unwrap()));
        prop_assert!((estimate_completion(&out.plan, now, &c) - out.finish).abs() < 1e-6);
        for a in out.plan.iter() {
            prop_assert!(a.duration > 0.0);
        }
    }

    #[test]
    fn adding_constraints_never_lowers_the_estimate(seed in any::<u64>()) {
        let (inst, c, now) = perturbed(seed);
        let out = plan_single(&inst.state, &inst.goal, &inst.robot, &inst.world, &ConstraintSet::empty(), now).unwrap();
        prop_assert!(estimate_completion(&out.plan, now, &c) >= out.finish - 1e-9);
        let constrained = plan_single(&inst.state, &inst.goal, &inst.robot, &inst.world, &c, now).unwrap();
        prop_assert!(constrained.finish >= out.finish - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn planning_is_deterministic(seed in any::<u64>()) {
        let (inst, c, now) = perturbed(seed);
        let a = plan_single(&inst.state, &inst.goal, &inst.robot, &inst.world, &c, now).unwrap();
        let b = plan_single(&inst.state, &inst.goal, &inst.robot, &inst.world, &c, now).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.plan).unwrap(), serde_json::to_string(&b.plan).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn team_plans_respect_busy_windows(seed in any::<u64>()) {
        let (world, members, c) = common::random_team(seed);
        let team = plan_team(&members, &world, &c).unwrap();
        for (m, plan) in members.iter().zip(&team.plans) {
            for t in assisted_traversal_starts(&world, plan, m.start, &c) {
                prop_assert!(c.blocking(t).is_none(), "robot {} door leg at {t} inside {:?}", m.robot.id, c);
            }
            let states = simulate_plan(&world, &m.robot, &m.state, plan).map_err(|e| TestCaseError::fail(format!("{e}")))?;
            prop_assert!(m.goal.is_satisfied(states.last().unwrap()));
        }
        let all: Vec<_> = team.reservations.iter().flatten().collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                prop_assert!(a.door != b.door || !(a.start < b.end - TIME_EPS && b.start < a.end - TIME_EPS));
            }
        }
    }
}
