//! Completion-time metrics derived from a trial trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::{Event, Trace};

pub const WITH_FEEDBACK: &str = "with_feedback";
pub const WITHOUT_FEEDBACK: &str = "without_feedback";

pub fn config_name(feedback: bool) -> &'static str {
    if feedback {
        WITH_FEEDBACK
    } else {
        WITHOUT_FEEDBACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub config: String,
    pub t_h: f64,
    pub t_r: Vec<f64>,
    pub t_all: f64,
    pub t_r_last: f64,
    pub replans: u32,
    pub feedback_issued: bool,
    pub aborted: bool,
}

impl TrialResult {
    /// Builds a result; `t_all` and `t_r_last` are derived so the identities hold.
    pub fn from_parts(
        seed: u64,
        config: &str,
        t_h: f64,
        t_r: Vec<f64>,
        replans: u32,
        feedback_issued: bool,
        aborted: bool,
    ) -> Self {
        TrialResult {
            seed,
            config: config.to_string(),
            t_all: total(t_h, &t_r),
            t_r_last: last(&t_r),
            t_h,
            t_r,
            replans,
            feedback_issued,
            aborted,
        }
    }
}

/// `T_all = T_H + Σ T_R[i]`, summed left to right.
pub fn total(t_h: f64, t_r: &[f64]) -> f64 {
    t_r.iter().fold(t_h, |acc, t| acc + t)
}

/// `T_R_last = max T_R[i]` (0 with no robots).
pub fn last(t_r: &[f64]) -> f64 {
    t_r.iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace does not start with a trial_start record")]
    MissingStart,
    #[error("trace has no trial_end record")]
    MissingEnd,
    #[error("goal event for unknown robot {0}")]
    UnknownRobot(usize),
}

/// Recovers the trial result from its trace. Robots (or the human) that never
/// finished are charged the trial end time.
pub fn compute_metrics(trace: &Trace) -> Result<TrialResult, MetricsError> {
    let mut records = trace.iter();
    let (seed, feedback, n) = match records.next().map(|r| &r.event) {
        Some(Event::TrialStart {
            seed,
            feedback,
            robots,
            ..
        }) => (*seed, *feedback, *robots),
        _ => return Err(MetricsError::MissingStart),
    };
    let mut t_r: Vec<Option<f64>> = vec![None; n];
    let mut t_h = None;
    let mut replans = 0;
    let mut feedback_issued = false;
    let mut end = None;
    for r in records {
        match &r.event {
            Event::Goal { robot } => {
                let slot = t_r.get_mut(*robot).ok_or(MetricsError::UnknownRobot(*robot))?;
                slot.get_or_insert(r.t);
            }
            Event::HumanDone { t_h: t } => t_h = Some(*t),
            Event::Replan { .. } => replans += 1,
            Event::Feedback { .. } => feedback_issued = true,
            Event::TrialEnd { aborted, .. } => end = Some((r.t, *aborted)),
            _ => {}
        }
    }
    let (end_t, aborted) = end.ok_or(MetricsError::MissingEnd)?;
    let t_r: Vec<f64> = t_r.into_iter().map(|t| t.unwrap_or(end_t)).collect();
    Ok(TrialResult::from_parts(
        seed,
        config_name(feedback),
        t_h.unwrap_or(end_t),
        t_r,
        replans,
        feedback_issued,
        aborted,
    ))
}
