//! Scripted virtual human: a dummy own task, at most one busy announcement, and
//! probabilistic door opening for robots waiting outside.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::TIME_EPS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionCosts {
    /// A2 / A3
    pub tilt_s: f64,
    /// A4 / A5
    pub feedback_s: f64,
    /// A6
    pub open_door_s: f64,
}

impl Default for ActionCosts {
    fn default() -> Self {
        ActionCosts {
            tilt_s: 2.0,
            feedback_s: 2.0,
            open_door_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HumanParams {
    pub own_task_mean_s: f64,
    pub own_task_sd_s: f64,
    /// Own-task durations are resampled until at least this long.
    pub own_task_min_s: f64,
    /// Mean feedback time as a fraction of the own-task duration.
    pub feedback_time_fraction: f64,
    pub feedback_time_sd_s: f64,
    pub door_check_period_s: f64,
    /// Chance that an idle work tick is spent tilting the device instead.
    pub tilt_probability: f64,
    pub open_probability: f64,
    pub open_probability_busy: f64,
    pub open_probability_finished: f64,
    pub action_costs: ActionCosts,
}

impl Default for HumanParams {
    fn default() -> Self {
        HumanParams {
            own_task_mean_s: 840.0,
            own_task_sd_s: 120.0,
            own_task_min_s: 60.0,
            feedback_time_fraction: 0.3,
            feedback_time_sd_s: 60.0,
            door_check_period_s: 20.0,
            tilt_probability: 0.05,
            open_probability: 0.6,
            open_probability_busy: 0.2,
            open_probability_finished: 0.9,
            action_costs: ActionCosts::default(),
        }
    }
}

impl HumanParams {
    /// Returns the offending field and a message.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let positive = [
            ("own_task_mean_s", self.own_task_mean_s),
            ("own_task_min_s", self.own_task_min_s),
            ("door_check_period_s", self.door_check_period_s),
            ("action_costs.tilt_s", self.action_costs.tilt_s),
            ("action_costs.feedback_s", self.action_costs.feedback_s),
            ("action_costs.open_door_s", self.action_costs.open_door_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err((name.into(), format!("must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("own_task_sd_s", self.own_task_sd_s),
            ("feedback_time_sd_s", self.feedback_time_sd_s),
            ("feedback_time_fraction", self.feedback_time_fraction),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err((name.into(), format!("must be >= 0, got {v}")));
            }
        }
        let probabilities = [
            ("tilt_probability", self.tilt_probability),
            ("open_probability", self.open_probability),
            ("open_probability_busy", self.open_probability_busy),
            ("open_probability_finished", self.open_probability_finished),
        ];
        for (name, v) in probabilities {
            if !(0.0..=1.0).contains(&v) {
                return Err((name.into(), format!("must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid human parameter `{field}`: {message}")]
pub struct HumanError {
    pub field: String,
    pub message: String,
}

/// The fixed feedback library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackKind {
    #[serde(rename = "busy_2_min")]
    Busy2Min,
    #[serde(rename = "busy_4_min")]
    Busy4Min,
}

impl FeedbackKind {
    pub const ALL: [FeedbackKind; 2] = [FeedbackKind::Busy2Min, FeedbackKind::Busy4Min];

    pub fn minutes(self) -> u32 {
        match self {
            FeedbackKind::Busy2Min => 2,
            FeedbackKind::Busy4Min => 4,
        }
    }

    pub fn duration_s(self) -> f64 {
        f64::from(self.minutes()) * 60.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackKind::Busy2Min => "busy_2_min",
            FeedbackKind::Busy4Min => "busy_4_min",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    pub issued_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPlan {
    pub time: f64,
    pub kind: FeedbackKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HumanActionKind {
    #[serde(rename = "A1")]
    WorkOwnTask,
    #[serde(rename = "A2")]
    TiltLeft,
    #[serde(rename = "A3")]
    TiltRight,
    #[serde(rename = "A4")]
    FeedbackBusy2,
    #[serde(rename = "A5")]
    FeedbackBusy4,
    #[serde(rename = "A6")]
    OpenDoor,
}

impl HumanActionKind {
    pub fn code(self) -> &'static str {
        match self {
            HumanActionKind::WorkOwnTask => "A1",
            HumanActionKind::TiltLeft => "A2",
            HumanActionKind::TiltRight => "A3",
            HumanActionKind::FeedbackBusy2 => "A4",
            HumanActionKind::FeedbackBusy4 => "A5",
            HumanActionKind::OpenDoor => "A6",
        }
    }

    fn feedback(kind: FeedbackKind) -> Self {
        match kind {
            FeedbackKind::Busy2Min => HumanActionKind::FeedbackBusy2,
            FeedbackKind::Busy4Min => HumanActionKind::FeedbackBusy4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanAction {
    pub kind: HumanActionKind,
    pub duration: f64,
    /// Door index for A6.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Ongoing {
    action: HumanAction,
    remaining: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanState {
    pub own_task_total: f64,
    pub own_task_remaining: f64,
    pub busy_until: Option<f64>,
    pub feedback_plan: Option<FeedbackPlan>,
    pub feedback_issued: bool,
    /// Human time spent so far while the own task is unfinished: work plus interruptions.
    pub elapsed: f64,
    /// Sum of durations of actions that interrupted the own task.
    pub interruptions: f64,
    pub last_door_check: Option<f64>,
    /// Value of `elapsed` when the own task finished.
    pub finished_at: Option<f64>,
    ongoing: Option<Ongoing>,
    pending_doors: VecDeque<usize>,
}

impl HumanState {
    pub fn is_done(&self) -> bool {
        self.finished_at.is_some()
    }

    pub fn is_busy(&self, clock: f64) -> bool {
        self.busy_until.is_some_and(|b| clock < b)
    }

    pub fn current_action(&self) -> Option<HumanAction> {
        self.ongoing.as_ref().map(|o| o.action)
    }

    /// Doors with an A6 queued or in progress.
    pub fn door_requested(&self, door: usize) -> bool {
        self.pending_doors.contains(&door)
            || self
                .ongoing
                .as_ref()
                .is_some_and(|o| o.action.kind == HumanActionKind::OpenDoor && o.action.door == Some(door))
    }
}

fn sample_normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("validated sd").sample(rng)
}

/// Draws the own-task duration and the feedback plan.
///
/// The feedback plan is always sampled so the human stream stays aligned across
/// paired configurations; it is dropped when feedback is disabled.
pub fn init_human(
    params: &HumanParams,
    feedback_enabled: bool,
    rng: &mut impl Rng,
) -> Result<HumanState, HumanError> {
    params
        .validate()
        .map_err(|(field, message)| HumanError { field, message })?;
    let mut total = params.own_task_min_s;
    let mut accepted = false;
    for _ in 0..1000 {
        let x = sample_normal(rng, params.own_task_mean_s, params.own_task_sd_s);
        if x >= params.own_task_min_s {
            total = x;
            accepted = true;
            break;
        }
    }
    if !accepted {
        total = params.own_task_min_s.max(params.own_task_mean_s);
    }
    let time = sample_normal(
        rng,
        params.feedback_time_fraction * total,
        params.feedback_time_sd_s,
    )
    .clamp(0.0, total);
    let kind = if rng.random_bool(0.5) {
        FeedbackKind::Busy2Min
    } else {
        FeedbackKind::Busy4Min
    };
    Ok(HumanState {
        own_task_total: total,
        own_task_remaining: total,
        busy_until: None,
        feedback_plan: feedback_enabled.then_some(FeedbackPlan { time, kind }),
        feedback_issued: false,
        elapsed: 0.0,
        interruptions: 0.0,
        last_door_check: None,
        finished_at: None,
        ongoing: None,
        pending_doors: VecDeque::new(),
    })
}

/// Per-robot chance that the human opens the door at a check.
pub fn door_open_probability(human: &HumanState, params: &HumanParams, clock: f64) -> f64 {
    if human.is_busy(clock) {
        params.open_probability_busy
    } else if human.own_task_remaining <= 0.0 {
        params.open_probability_finished
    } else {
        params.open_probability
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoorCheck {
    pub door: usize,
    pub waiting: usize,
    pub probability: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanStep {
    /// Action started this tick (A1 is reported only when work begins after another action).
    pub started: Option<HumanAction>,
    pub feedback: Option<FeedbackEvent>,
    /// Doors the human finished opening this tick.
    pub opened: Vec<usize>,
    pub checks: Vec<DoorCheck>,
    pub finished_own_task: bool,
}

/// Whether `clock` falls on a door-check instant (a multiple of the period).
pub fn is_check_time(clock: f64, period: f64, dt: f64) -> bool {
    let k = (clock / period).round();
    (clock - k * period).abs() < dt / 2.0 - TIME_EPS
}

/// Advances the human through the tick `[clock, clock + dt)`.
///
/// `waiting[d]` is the number of robots waiting at door `d`. Door checks draw
/// from `door_rng`, one Bernoulli per waiting robot; tilts and their direction
/// draw from `human_rng` and `tie_rng`.
pub fn step_human(
    human: &mut HumanState,
    params: &HumanParams,
    waiting: &[usize],
    clock: f64,
    dt: f64,
    door_rng: &mut impl Rng,
    human_rng: &mut impl Rng,
    tie_rng: &mut impl Rng,
) -> HumanStep {
    let mut out = HumanStep::default();

    if is_check_time(clock, params.door_check_period_s, dt) {
        human.last_door_check = Some(clock);
        let p = door_open_probability(human, params, clock);
        for (door, &n) in waiting.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let successes = (0..n).filter(|_| door_rng.random_bool(p)).count();
            if successes > 0 && !human.door_requested(door) {
                human.pending_doors.push_back(door);
            }
            out.checks.push(DoorCheck {
                door,
                waiting: n,
                probability: p,
                successes,
            });
        }
    }

    if human.ongoing.is_none() {
        let costs = &params.action_costs;
        let feedback_due = human
            .feedback_plan
            .filter(|plan| !human.feedback_issued && clock + TIME_EPS >= plan.time);
        let next = if let Some(plan) = feedback_due {
            human.feedback_issued = true;
            human.busy_until = Some(clock + plan.kind.duration_s());
            out.feedback = Some(FeedbackEvent {
                kind: plan.kind,
                issued_at: clock,
            });
            Some(HumanAction {
                kind: HumanActionKind::feedback(plan.kind),
                duration: costs.feedback_s,
                door: None,
            })
        } else if let Some(door) = human.pending_doors.pop_front() {
            Some(HumanAction {
                kind: HumanActionKind::OpenDoor,
                duration: costs.open_door_s,
                door: Some(door),
            })
        } else if human.own_task_remaining > 0.0 && human_rng.random_bool(params.tilt_probability) {
            let kind = if tie_rng.random_bool(0.5) {
                HumanActionKind::TiltLeft
            } else {
                HumanActionKind::TiltRight
            };
            Some(HumanAction {
                kind,
                duration: costs.tilt_s,
                door: None,
            })
        } else {
            None
        };
        if let Some(action) = next {
            out.started = Some(action);
            human.ongoing = Some(Ongoing {
                action,
                remaining: action.duration,
            });
        }
    }

    match human.ongoing.as_mut() {
        Some(ongoing) => {
            ongoing.remaining -= dt;
            if ongoing.remaining <= TIME_EPS {
                let action = ongoing.action;
                human.ongoing = None;
                if human.finished_at.is_none() {
                    human.interruptions += action.duration;
                    human.elapsed += action.duration;
                }
                if let (HumanActionKind::OpenDoor, Some(d)) = (action.kind, action.door) {
                    out.opened.push(d);
                }
            }
        }
        None if human.own_task_remaining > 0.0 => {
            let work = dt.min(human.own_task_remaining);
            human.own_task_remaining -= work;
            human.elapsed += work;
            if human.own_task_remaining <= TIME_EPS {
                human.own_task_remaining = 0.0;
                human.finished_at = Some(human.elapsed);
                out.finished_own_task = true;
            }
        }
        None => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, DOOR, HUMAN, TIE_BREAK};

    fn fresh(params: &HumanParams, feedback: bool, seed: u64) -> HumanState {
        init_human(params, feedback, &mut stream(seed, HUMAN)).unwrap()
    }

    #[test]
    fn own_task_sampling_matches_mean() {
        let params = HumanParams::default();
        let mut rng = stream(1, HUMAN);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| init_human(&params, true, &mut rng).unwrap().own_task_total)
            .collect();
        assert!(draws.iter().all(|&x| x >= 60.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 840.0).abs() < 5.0, "{mean}");
    }

    #[test]
    fn zero_sd_gives_the_mean() {
        let params = HumanParams {
            own_task_sd_s: 0.0,
            ..HumanParams::default()
        };
        assert_eq!(fresh(&params, true, 3).own_task_total, 840.0);
    }

    #[test]
    fn feedback_disabled_has_no_plan() {
        let h = fresh(&HumanParams::default(), false, 5);
        assert_eq!(h.feedback_plan, None);
        // same own-task draw as the paired trial with feedback
        assert_eq!(h.own_task_total, fresh(&HumanParams::default(), true, 5).own_task_total);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let params = HumanParams {
            own_task_mean_s: -1.0,
            ..HumanParams::default()
        };
        let err = init_human(&params, true, &mut stream(0, HUMAN)).unwrap_err();
        assert_eq!(err.field, "own_task_mean_s");
    }

    #[test]
    fn probability_regimes() {
        let params = HumanParams::default();
        let mut h = fresh(&params, true, 2);
        assert_eq!(door_open_probability(&h, &params, 10.0), 0.6);
        h.busy_until = Some(100.0);
        assert_eq!(door_open_probability(&h, &params, 50.0), 0.2);
        assert_eq!(door_open_probability(&h, &params, 100.0), 0.6);
        h.own_task_remaining = 0.0;
        assert_eq!(door_open_probability(&h, &params, 100.0), 0.9);
        assert_eq!(door_open_probability(&h, &params, 99.0), 0.2);
    }

    #[test]
    fn check_instants() {
        assert!(is_check_time(0.0, 20.0, 0.5));
        assert!(is_check_time(40.0, 20.0, 0.5));
        assert!(!is_check_time(40.5, 20.0, 0.5));
        assert!(!is_check_time(39.5, 20.0, 0.5));
    }

    #[test]
    fn scheduled_feedback_fires_once() {
        let params = HumanParams::default();
        let mut h = fresh(&params, true, 9);
        h.feedback_plan = Some(FeedbackPlan {
            time: 300.0,
            kind: FeedbackKind::Busy2Min,
        });
        let (mut d, mut r, mut t) = (stream(9, DOOR), stream(9, HUMAN), stream(9, TIE_BREAK));
        let mut events = Vec::new();
        let mut clock = 0.0;
        while clock < 400.0 {
            let step = step_human(&mut h, &params, &[], clock, 0.5, &mut d, &mut r, &mut t);
            if let Some(e) = step.feedback {
                events.push(e);
                assert_eq!(h.busy_until, Some(e.issued_at + 120.0));
            }
            clock += 0.5;
        }
        assert_eq!(events.len(), 1);
        // the human may be mid-tilt at 300 s; the click happens right after
        assert!(events[0].issued_at >= 300.0 && events[0].issued_at <= 302.0);
    }

    #[test]
    fn no_waiting_robots_never_opens() {
        let params = HumanParams::default();
        let mut h = fresh(&params, false, 4);
        let (mut d, mut r, mut t) = (stream(4, DOOR), stream(4, HUMAN), stream(4, TIE_BREAK));
        for i in 0..2000 {
            let step = step_human(&mut h, &params, &[0], i as f64 * 0.5, 0.5, &mut d, &mut r, &mut t);
            assert!(step.opened.is_empty());
            assert!(step.checks.is_empty());
        }
    }

    #[test]
    fn human_time_accounts_for_interruptions() {
        let params = HumanParams {
            own_task_mean_s: 200.0,
            own_task_sd_s: 30.0,
            ..HumanParams::default()
        };
        let mut h = fresh(&params, true, 11);
        let (mut d, mut r, mut t) = (stream(11, DOOR), stream(11, HUMAN), stream(11, TIE_BREAK));
        let mut clock = 0.0;
        let mut opened = 0;
        while !h.is_done() {
            let waiting = if (clock as u64 / 60).is_multiple_of(2) { [2] } else { [0] };
            opened += step_human(&mut h, &params, &waiting, clock, 0.5, &mut d, &mut r, &mut t)
                .opened
                .len();
            clock += 0.5;
        }
        assert!(opened > 0);
        let t_h = h.finished_at.unwrap();
        assert!((t_h - (h.own_task_total + h.interruptions)).abs() < 1e-6);
        assert!(t_h <= clock + 1e-9 && t_h > clock - 0.5 - 1e-9);
    }
}
