use arn_core::human::{init_human, step_human, HumanActionKind, HumanParams, HumanState};
use arn_core::rng::{stream, DOOR, HUMAN, TIE_BREAK};

const SAMPLES: usize = 10_000;

#[derive(Clone, Copy)]
enum Regime {
    Available,
    Busy,
    Finished,
}

fn human_in(regime: Regime, params: &HumanParams, seed: u64) -> HumanState {
    let mut h = init_human(params, false, &mut stream(seed, HUMAN)).unwrap();
    match regime {
        Regime::Available => {}
        Regime::Busy => h.busy_until = Some(1e9),
        Regime::Finished => h.own_task_remaining = 0.0,
    }
    h
}

/// Fraction of door checks at which at least one of `waiting` robots got a yes.
fn open_rate(regime: Regime, waiting: usize) -> f64 {
    let params = HumanParams::default();
    let mut door = stream(42, DOOR);
    let mut human = stream(42, HUMAN);
    let mut tie = stream(42, TIE_BREAK);
    let opened = (0..SAMPLES)
        .filter(|&i| {
            let mut h = human_in(regime, &params, i as u64);
            let step = step_human(&mut h, &params, &[waiting], 0.0, 0.5, &mut door, &mut human, &mut tie);
            assert_eq!(step.checks.len(), 1);
            step.checks[0].successes > 0
        })
        .count();
    opened as f64 / SAMPLES as f64
}

#[test]
fn per_check_open_frequencies_match_each_regime() {
    for (regime, p) in [(Regime::Available, 0.6), (Regime::Busy, 0.2), (Regime::Finished, 0.9)] {
        let rate = open_rate(regime, 1);
        assert!((rate - p).abs() < 0.03, "expected {p}, got {rate}");
    }
}

#[test]
fn three_waiting_robots_raise_the_open_rate() {
    // 1 - 0.4^3
    let rate = open_rate(Regime::Available, 3);
    assert!((rate - 0.936).abs() < 0.01, "{rate}");
}

#[test]
fn tilts_happen_at_the_configured_rate_and_split_evenly() {
    let params = HumanParams::default();
    let mut door = stream(7, DOOR);
    let mut human = stream(7, HUMAN);
    let mut tie = stream(7, TIE_BREAK);
    let (mut left, mut right) = (0usize, 0usize);
    for i in 0..SAMPLES {
        let mut h = human_in(Regime::Available, &params, i as u64);
        // off a check instant, so only the tilt draw is in play
        let step = step_human(&mut h, &params, &[0], 0.5, 0.5, &mut door, &mut human, &mut tie);
        match step.started.map(|a| a.kind) {
            Some(HumanActionKind::TiltLeft) => left += 1,
            Some(HumanActionKind::TiltRight) => right += 1,
            None => {}
            Some(other) => panic!("unexpected {other:?}"),
        }
    }
    let rate = (left + right) as f64 / SAMPLES as f64;
    assert!((rate - 0.05).abs() < 0.01, "{rate}");
    let share = left as f64 / (left + right) as f64;
    assert!((share - 0.5).abs() < 0.1, "{share}");
}

#[test]
fn no_tilts_once_the_own_task_is_done() {
    let params = HumanParams::default();
    let (mut door, mut human, mut tie) = (stream(3, DOOR), stream(3, HUMAN), stream(3, TIE_BREAK));
    let mut h = human_in(Regime::Finished, &params, 3);
    for k in 1..2000 {
        let step = step_human(&mut h, &params, &[0], k as f64 * 0.5, 0.5, &mut door, &mut human, &mut tie);
        assert!(step.started.is_none());
    }
}
