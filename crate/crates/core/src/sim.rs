//! Discrete-event apartment simulator.
//!
//! The robot moves in straight lines between room waypoints at constant
//! speed and greets people in place. Time is simulated: every action
//! advances [`Sim::clock`], and an armed cancellation deadline fires when the
//! clock reaches it. Navigation is checked for cancellation every 0.1 s of
//! simulated time; a canceled leg leaves the robot at whichever endpoint is
//! closer to its interpolated position.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsm::CancellationToken;
use crate::kgraph::{Edge, GraphError, KnowledgeGraph, Pattern, Triple};
use crate::plan::ActionCall;

/// Navigation cancellation granularity, in tenths of a second.
const SUBSTEPS_PER_SECOND: f64 = 10.0;
/// Slack for comparing simulated timestamps built by different additions.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("precondition violated for {action}: {reason}")]
    PreconditionViolation { action: String, reason: String },
    #[error("unsupported action {0}")]
    UnsupportedAction(String),
    #[error("{action} canceled at t={at}")]
    Canceled {
        action: String,
        at: f64,
        partial: Box<ActionEffect>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldMap {
    pub waypoints: BTreeMap<String, [f64; 2]>,
    /// Meters per second.
    pub robot_speed: f64,
    /// Seconds.
    pub greet_duration: f64,
}

impl Default for WorldMap {
    fn default() -> Self {
        WorldMap {
            waypoints: BTreeMap::from([
                ("entrance".to_string(), [0.0, 0.0]),
                ("bathroom".to_string(), [4.0, 0.0]),
                ("bedroom".to_string(), [4.0, 3.0]),
                ("living_room".to_string(), [0.0, 3.0]),
            ]),
            robot_speed: 0.5,
            greet_duration: 2.0,
        }
    }
}

impl WorldMap {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.waypoints.is_empty() {
            return Err(SimError::InvalidMap("no waypoints".into()));
        }
        if let Some((room, _)) = self
            .waypoints
            .iter()
            .find(|(_, p)| !p.iter().all(|c| c.is_finite()))
        {
            return Err(SimError::InvalidMap(format!("waypoint `{room}` is not finite")));
        }
        if !(self.robot_speed > 0.0 && self.robot_speed.is_finite()) {
            return Err(SimError::InvalidMap("robot_speed must be positive".into()));
        }
        if !(self.greet_duration >= 0.0 && self.greet_duration.is_finite()) {
            return Err(SimError::InvalidMap("greet_duration must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let map: WorldMap =
            serde_json::from_str(text).map_err(|e| SimError::InvalidMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidMap(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn distance(&self, from: &str, to: &str) -> Option<f64> {
        let a = self.waypoints.get(from)?;
        let b = self.waypoints.get(to)?;
        Some((a[0] - b[0]).hypot(a[1] - b[1]))
    }
}

/// What one action did to the world.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ActionEffect {
    pub added: Vec<Triple>,
    pub removed: Vec<Triple>,
    pub clock_delta: f64,
    pub distance_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventStatus {
    Completed,
    Canceled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionEvent {
    pub seq: usize,
    pub action: String,
    pub start: f64,
    pub end: f64,
    pub distance: f64,
    pub robot_room: String,
    pub status: EventStatus,
}

/// Anything that can carry out plan steps against the knowledge graph.
pub trait Executor {
    fn execute(
        &mut self,
        graph: &mut KnowledgeGraph,
        call: &ActionCall,
        token: &CancellationToken,
    ) -> Result<ActionEffect, SimError>;
}

#[derive(Debug)]
pub struct Sim {
    map: WorldMap,
    clock: f64,
    odometer: f64,
    robot_room: String,
    events: Vec<ActionEvent>,
    deadline: Option<(f64, CancellationToken)>,
}

impl Sim {
    pub fn new(map: WorldMap, robot_room: &str) -> Result<Self, SimError> {
        map.validate()?;
        if !map.waypoints.contains_key(robot_room) {
            return Err(SimError::InvalidMap(format!("start room `{robot_room}` has no waypoint")));
        }
        Ok(Sim {
            map,
            clock: 0.0,
            odometer: 0.0,
            robot_room: robot_room.to_string(),
            events: Vec::new(),
            deadline: None,
        })
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn odometer(&self) -> f64 {
        self.odometer
    }

    pub fn robot_room(&self) -> &str {
        &self.robot_room
    }

    pub fn events(&self) -> &[ActionEvent] {
        &self.events
    }

    /// `(elapsed seconds, traveled meters)`.
    pub fn metrics(&self) -> (f64, f64) {
        (self.clock, self.odometer)
    }

    /// Cancels `token` once the simulated clock reaches `at`. Replaces any
    /// previously armed deadline.
    pub fn arm_cancellation(&mut self, at: f64, token: CancellationToken) {
        self.deadline = Some((at, token));
        self.fire_deadline();
    }

    pub fn disarm(&mut self) {
        self.deadline = None;
    }

    fn fire_deadline(&self) {
        if let Some((at, token)) = &self.deadline {
            if self.clock + TIME_EPS >= *at {
                token.cancel();
            }
        }
    }

    pub fn write_events_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn log(&mut self, call: &ActionCall, start: f64, distance: f64, status: EventStatus) {
        self.events.push(ActionEvent {
            seq: self.events.len(),
            action: call.to_string(),
            start,
            end: self.clock,
            distance,
            robot_room: self.robot_room.clone(),
            status,
        });
    }

    fn move_at_edge(
        graph: &mut KnowledgeGraph,
        robot: &str,
        to: &str,
        effect: &mut ActionEffect,
    ) -> Result<(), SimError> {
        for t in graph.matches(&Pattern::any().source(robot).relation("at")) {
            if t.target != to {
                graph.remove_edge(&t.source, &t.relation, &t.target)?;
                effect.removed.push(t);
            }
        }
        let triple = Triple::new(robot, "at", to);
        if !graph.contains_edge(&triple) {
            graph.add_edge(Edge::new(robot, "at", to))?;
            effect.added.push(triple);
        }
        Ok(())
    }

    fn navigate(
        &mut self,
        graph: &mut KnowledgeGraph,
        call: &ActionCall,
        token: &CancellationToken,
    ) -> Result<ActionEffect, SimError> {
        let violation = |reason: String| SimError::PreconditionViolation {
            action: call.to_string(),
            reason,
        };
        let [robot, from, to] = match call.args.as_slice() {
            [r, f, t] => [r.as_str(), f.as_str(), t.as_str()],
            _ => return Err(violation("navigate takes (robot, from, to)".into())),
        };
        if from != self.robot_room {
            return Err(violation(format!(
                "robot is at `{}`, not `{from}`",
                self.robot_room
            )));
        }
        let distance = self
            .map
            .distance(from, to)
            .ok_or_else(|| violation(format!("no waypoint for `{to}`")))?;
        let duration = distance / self.map.robot_speed;
        let substeps = (duration * SUBSTEPS_PER_SECOND - TIME_EPS).ceil().max(0.0) as u64;
        let start = self.clock;
        let mut effect = ActionEffect::default();

        for k in 1..substeps {
            let t = k as f64 / SUBSTEPS_PER_SECOND;
            self.clock = start + t;
            self.fire_deadline();
            if token.is_canceled() {
                let traveled = distance * t / duration;
                let snapped = if 2.0 * traveled <= distance { from } else { to };
                self.odometer += traveled;
                self.robot_room = snapped.to_string();
                Self::move_at_edge(graph, robot, snapped, &mut effect)?;
                effect.clock_delta = t;
                effect.distance_delta = traveled;
                self.log(call, start, traveled, EventStatus::Canceled);
                return Err(SimError::Canceled {
                    action: call.to_string(),
                    at: self.clock,
                    partial: Box::new(effect),
                });
            }
        }

        self.clock = start + duration;
        self.odometer += distance;
        self.robot_room = to.to_string();
        Self::move_at_edge(graph, robot, to, &mut effect)?;
        effect.clock_delta = duration;
        effect.distance_delta = distance;
        self.fire_deadline();
        self.log(call, start, distance, EventStatus::Completed);
        Ok(effect)
    }

    fn greet(
        &mut self,
        graph: &mut KnowledgeGraph,
        call: &ActionCall,
    ) -> Result<ActionEffect, SimError> {
        let violation = |reason: String| SimError::PreconditionViolation {
            action: call.to_string(),
            reason,
        };
        let [robot, person, room] = match call.args.as_slice() {
            [r, p, w] => [r.as_str(), p.as_str(), w.as_str()],
            _ => return Err(violation("greet takes (robot, person, room)".into())),
        };
        if room != self.robot_room {
            return Err(violation(format!(
                "robot is at `{}`, not `{room}`",
                self.robot_room
            )));
        }
        if !graph.contains_edge(&Triple::new(person, "at", room)) {
            return Err(violation(format!("`{person}` is not at `{room}`")));
        }
        let start = self.clock;
        let mut effect = ActionEffect::default();
        let greeted = Triple::new(robot, "greeted", person);
        if graph.contains_edge(&greeted) {
            graph.remove_edge(robot, "greeted", person)?;
            effect.removed.push(greeted.clone());
        }
        graph.add_edge(Edge::new(robot, "greeted", person))?;
        effect.added.push(greeted);
        self.clock = start + self.map.greet_duration;
        effect.clock_delta = self.map.greet_duration;
        self.fire_deadline();
        self.log(call, start, 0.0, EventStatus::Completed);
        Ok(effect)
    }
}

impl Executor for Sim {
    fn execute(
        &mut self,
        graph: &mut KnowledgeGraph,
        call: &ActionCall,
        token: &CancellationToken,
    ) -> Result<ActionEffect, SimError> {
        self.fire_deadline();
        if token.is_canceled() {
            return Err(SimError::Canceled {
                action: call.to_string(),
                at: self.clock,
                partial: Box::default(),
            });
        }
        match call.action.as_str() {
            "navigate" => self.navigate(graph, call, token),
            "greet" => self.greet(graph, call),
            _ => Err(SimError::UnsupportedAction(call.to_string())),
        }
    }
}
