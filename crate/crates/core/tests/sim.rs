mod common;

use arn_core::domain::{RobotSpec, TaskSpec};
use arn_core::human::HumanParams;
use arn_core::scenario::{office3, Scenario};
use arn_core::sim::{
    compute_metrics, run_trial, Event, LiveHuman, LiveInputs, NullHuman, Trace, Trial, DT, T_MAX,
};
use proptest::prelude::*;
use rand::Rng;

fn count(trace: &Trace, pred: impl Fn(&Event) -> bool) -> usize {
    trace.iter().filter(|r| pred(&r.event)).count()
}

/// A random world with 1..=3 robots sharing its deliveries.
fn random_scenario(seed: u64) -> Scenario {
    let inst = common::random_instance(seed, 7, 3);
    let mut rng = common::rng(seed ^ 0xA11);
    let n = rng.random_range(1..=3);
    let robots: Vec<RobotSpec> = (0..n)
        .map(|i| RobotSpec {
            id: i,
            start: inst.world.nodes()[rng.random_range(0..inst.world.nodes().len())].id.clone(),
            ..inst.robot.clone()
        })
        .collect();
    let mut tasks: Vec<TaskSpec> = (0..n).map(|robot| TaskSpec { robot, deliveries: Vec::new() }).collect();
    for d in inst.goal.deliveries {
        tasks[rng.random_range(0..n)].deliveries.push(d);
    }
    Scenario {
        name: format!("random-{seed}"),
        world: inst.world,
        robots,
        tasks,
        human: HumanParams::default(),
    }
}

#[test]
fn office3_trials_are_deterministic_and_round_trip() {
    let s = office3();
    for seed in [0, 1, 99] {
        for feedback in [true, false] {
            let (a, ta) = run_trial(&s, seed, feedback).unwrap();
            let (b, tb) = run_trial(&s, seed, feedback).unwrap();
            assert_eq!(a, b);
            let text = ta.to_ndjson();
            assert_eq!(text, tb.to_ndjson());
            assert_eq!(Trace::from_ndjson(&text).unwrap(), ta);
        }
    }
}

#[test]
fn results_agree_with_the_trace() {
    let s = office3();
    for seed in 0..10 {
        for feedback in [true, false] {
            let (r, trace) = run_trial(&s, seed, feedback).unwrap();
            assert_eq!(compute_metrics(&trace).unwrap(), r);
            let sum: f64 = r.t_r.iter().sum();
            assert!((r.t_all - (r.t_h + sum)).abs() < 1e-9);
            assert_eq!(r.t_r_last, r.t_r.iter().copied().fold(0.0, f64::max));
            assert_eq!(r.replans as usize, count(&trace, |e| matches!(e, Event::Replan { .. })));
            assert_eq!(
                count(&trace, |e| matches!(e, Event::Replan { .. })),
                count(&trace, |e| matches!(e, Event::Constraints { .. }))
            );
            assert_eq!(r.feedback_issued, count(&trace, |e| matches!(e, Event::Feedback { .. })) > 0);
        }
    }
}

#[test]
fn without_feedback_nothing_is_replanned() {
    let s = office3();
    for seed in 0..10 {
        let (r, trace) = run_trial(&s, seed, false).unwrap();
        assert_eq!(r.replans, 0);
        assert!(!r.feedback_issued);
        assert_eq!(count(&trace, |e| matches!(e, Event::Feedback { .. } | Event::Constraints { .. })), 0);
    }
}

#[test]
fn one_frame_per_tick() {
    let s = office3();
    let human = arn_core::sim::SimulatedHuman::new(&s.human, true, 4).unwrap();
    let mut trial = Trial::new(&s, 4, true, Box::new(human));
    let mut ticks = Vec::new();
    let mut changes = 0;
    let mut last_constraints = None;
    while let Some(frame) = trial.tick() {
        if last_constraints.as_ref().is_some_and(|c| *c != frame.constraints) {
            changes += 1;
        }
        last_constraints = Some(frame.constraints.clone());
        ticks.push(frame.tick);
    }
    assert!(trial.is_finished());
    assert_eq!(ticks.len() as u64, trial.frames());
    for (k, t) in ticks.iter().enumerate() {
        assert_eq!(*t, k as f64 * DT);
    }
    let (r, _) = trial.finish();
    // a frame shows the constraints in force before that tick's feedback
    assert!(changes <= r.replans as usize && r.replans as usize <= changes + 1);
    assert!(trial_ticks_bound(&ticks));
}

fn trial_ticks_bound(ticks: &[f64]) -> bool {
    ticks.last().is_some_and(|&t| t < T_MAX)
}

#[test]
fn a_live_human_without_input_is_a_null_human() {
    let s = office3();
    let live = Trial::new(&s, 3, true, Box::new(LiveHuman::new(LiveInputs::default()))).run();
    let null = Trial::new(&s, 3, true, Box::new(NullHuman)).run();
    assert_eq!(live.1.to_ndjson(), null.1.to_ndjson());
    assert!(live.0.aborted, "nobody opens the door");
}

#[test]
fn live_feedback_and_door_commands_take_effect() {
    let s = office3();
    let inputs = LiveInputs::default();
    let mut trial = Trial::new(&s, 0, true, Box::new(LiveHuman::new(inputs.clone())));
    inputs.push(arn_core::sim::LiveInput::Feedback(arn_core::human::FeedbackKind::Busy2Min));
    let mut k = 0;
    while !trial.is_finished() {
        // somebody opens the door every half minute
        if k % 60 == 0 {
            inputs.push(arn_core::sim::LiveInput::OpenDoor(0));
        }
        trial.tick();
        k += 1;
    }
    let (r, trace) = trial.finish();
    assert!(!r.aborted, "{:?}", trace.records.last());
    assert!(r.feedback_issued);
    assert!(r.replans >= 1);
    assert_eq!(r.t_h, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_trials_keep_their_invariants(seed in any::<u64>(), feedback in any::<bool>()) {
        let s = random_scenario(seed);
        let (r, trace) = run_trial(&s, seed, feedback).unwrap();
        let (r2, trace2) = run_trial(&s, seed, feedback).unwrap();
        prop_assert_eq!(&r, &r2);
        prop_assert_eq!(trace.to_ndjson(), trace2.to_ndjson());
        prop_assert_eq!(compute_metrics(&trace).unwrap(), r.clone());
        if !feedback {
            prop_assert_eq!(r.replans, 0);
        }
        // the only acceptable abort is running out of time
        if let Some(Event::TrialEnd { aborted: true, reason }) = trace.records.last().map(|r| &r.event) {
            prop_assert_eq!(reason.as_deref(), Some("timeout"));
        }
        let mut last = 0.0;
        for rec in trace.iter() {
            prop_assert!(rec.t >= last);
            last = rec.t;
        }
    }
}
