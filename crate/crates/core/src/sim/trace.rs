//! Trial event log, serialized as newline-delimited JSON.

use serde::{Deserialize, Serialize};

use crate::constraints::Window;
use crate::domain::DoorState;
use crate::human::{FeedbackKind, HumanActionKind};
use crate::planner::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    TrialStart {
        scenario: String,
        seed: u64,
        feedback: bool,
        robots: usize,
    },
    Plan {
        robot: usize,
        replan: bool,
        estimate: f64,
        actions: Vec<Action>,
    },
    Replan {
        windows: usize,
    },
    ActionStart {
        robot: usize,
        action: String,
    },
    ActionDone {
        robot: usize,
        action: String,
    },
    ActionAbort {
        robot: usize,
        action: String,
    },
    Door {
        door: String,
        state: DoorState,
    },
    HumanAction {
        code: HumanActionKind,
        duration: f64,
    },
    DoorCheck {
        door: String,
        waiting: usize,
        probability: f64,
        successes: usize,
    },
    Feedback {
        kind: FeedbackKind,
    },
    FeedbackConsumed {
        kind: FeedbackKind,
        issued_at: f64,
    },
    Constraints {
        windows: Vec<Window>,
    },
    Goal {
        robot: usize,
    },
    HumanDone {
        t_h: f64,
    },
    TrialEnd {
        aborted: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<Record>,
}

impl Trace {
    pub fn push(&mut self, t: f64, event: Event) {
        self.records.push(Record { t, event });
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Trace { records })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Record> {
        self.records.iter()
    }
}
