use std::io::{self, Write};

use serde::Serialize;

use crate::fsm::TraceEntry;
use crate::plan::ActionCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Plan,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionStatus {
    Completed,
    Failed,
    Canceled,
}

/// One thing that happened while pursuing a goal.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Prompt {
        round: usize,
        purpose: Purpose,
        text: String,
    },
    Response {
        round: usize,
        purpose: Purpose,
        text: String,
        tokens: usize,
        latency_s: f64,
    },
    BackendError {
        round: usize,
        purpose: Purpose,
        error: String,
    },
    Rejected {
        round: usize,
        purpose: Purpose,
        error: String,
    },
    Plan {
        round: usize,
        steps: Vec<ActionCall>,
    },
    Action {
        round: usize,
        call: String,
        status: ActionStatus,
        detail: Option<String>,
        clock_delta: f64,
        distance_delta: f64,
    },
    Check {
        round: usize,
        achieved: bool,
        rationale: String,
    },
    Replan {
        round: usize,
        feedback: String,
    },
    Outcome {
        outcome: String,
        reason: Option<String>,
    },
    State(TraceEntry),
}

/// Everything recorded for one goal: layer events followed by the state
/// machine's entry log.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MissionTrace {
    pub events: Vec<TraceEvent>,
}

impl MissionTrace {
    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn prompts(&self, purpose: Purpose) -> Vec<&str> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Prompt { purpose: p, text, .. } if *p == purpose => Some(text.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn states(&self) -> Vec<&TraceEntry> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::State(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}
