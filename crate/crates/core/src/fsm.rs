//! Hierarchical state machines with outcome-based transitions, a typed
//! blackboard and cooperative cancellation.
//!
//! A [`StateMachine`] maps `(state, outcome)` pairs either to another state
//! or to one of the machine's terminal outcomes. Machines nest: [`nest`]
//! turns a machine into a state whose outcome is the child's terminal
//! outcome. The cancellation token is checked before a state is entered and
//! after it returns, so a cancel request is honored within one state
//! boundary at every nesting level.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub const SUCCEEDED: &str = "succeeded";
pub const FAILED: &str = "failed";
pub const CANCELED: &str = "canceled";

pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Set-once flag shared by everything taking part in one run.
#[derive(Debug, Clone, Default)]
pub struct CancellationToken(Arc<AtomicBool>);

impl CancellationToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_canceled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlackboardError {
    #[error("blackboard key `{0}` was read before being written")]
    Missing(String),
    #[error("blackboard key `{0}` holds a different type")]
    WrongType(String),
}

#[derive(Default)]
pub struct Blackboard {
    values: HashMap<String, Box<dyn Any + Send>>,
}

impl fmt::Debug for Blackboard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<&String> = self.values.keys().collect();
        keys.sort();
        f.debug_struct("Blackboard").field("keys", &keys).finish()
    }
}

impl Blackboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set<T: Any + Send>(&mut self, key: &str, value: T) {
        self.values.insert(key.to_string(), Box::new(value));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: Any + Send>(&self, key: &str) -> Result<&T, BlackboardError> {
        self.values
            .get(key)
            .ok_or_else(|| BlackboardError::Missing(key.to_string()))?
            .downcast_ref()
            .ok_or_else(|| BlackboardError::WrongType(key.to_string()))
    }

    pub fn get_mut<T: Any + Send>(&mut self, key: &str) -> Result<&mut T, BlackboardError> {
        self.values
            .get_mut(key)
            .ok_or_else(|| BlackboardError::Missing(key.to_string()))?
            .downcast_mut()
            .ok_or_else(|| BlackboardError::WrongType(key.to_string()))
    }

    pub fn take<T: Any + Send>(&mut self, key: &str) -> Result<T, BlackboardError> {
        let boxed = self
            .values
            .remove(key)
            .ok_or_else(|| BlackboardError::Missing(key.to_string()))?;
        match boxed.downcast::<T>() {
            Ok(v) => Ok(*v),
            Err(original) => {
                self.values.insert(key.to_string(), original);
                Err(BlackboardError::WrongType(key.to_string()))
            }
        }
    }

    pub fn remove(&mut self, key: &str) -> bool {
        self.values.remove(key).is_some()
    }
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Blackboard(#[from] BlackboardError),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Machine(#[from] FsmError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsmError {
    #[error("state `{state}` returned outcome `{outcome}`, which has no transition")]
    InvalidTransition { state: String, outcome: String },
    #[error("machine `{machine}` is invalid: {}", .defects.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid { machine: String, defects: Vec<Defect> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    NoStates,
    MissingInitial(String),
    UndefinedTarget {
        state: String,
        outcome: String,
        target: String,
    },
    AmbiguousTarget {
        state: String,
        target: String,
    },
    UncoveredOutcome {
        state: String,
        outcome: String,
    },
    UndeclaredOutcome {
        state: String,
        outcome: String,
    },
    Unreachable(String),
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::NoStates => write!(f, "no states"),
            Defect::MissingInitial(s) => write!(f, "initial state `{s}` does not exist"),
            Defect::UndefinedTarget { state, outcome, target } => write!(
                f,
                "`{state}` --{outcome}--> `{target}`: target is neither a state nor a declared outcome"
            ),
            Defect::AmbiguousTarget { state, target } => write!(
                f,
                "`{state}` targets `{target}`, which is both a state and an outcome"
            ),
            Defect::UncoveredOutcome { state, outcome } => {
                write!(f, "`{state}` can return `{outcome}` but has no transition for it")
            }
            Defect::UndeclaredOutcome { state, outcome } => {
                write!(f, "`{state}` has a transition for `{outcome}`, which it never returns")
            }
            Defect::Unreachable(s) => write!(f, "state `{s}` is unreachable"),
        }
    }
}

/// One entered state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub seq: usize,
    /// Slash-separated path from the root machine, e.g. `PLANNING/GENERATING_PLAN`.
    pub path: String,
    pub state: String,
    pub depth: usize,
    /// Milliseconds since the root run started.
    pub t_ms: f64,
    pub outcome: Option<String>,
}

pub struct Context<'t> {
    token: &'t CancellationToken,
    path: Vec<String>,
    trace: Vec<TraceEntry>,
    failures: Vec<String>,
    started: Instant,
}

impl<'t> Context<'t> {
    fn new(token: &'t CancellationToken) -> Self {
        Context {
            token,
            path: Vec::new(),
            trace: Vec::new(),
            failures: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn token(&self) -> &CancellationToken {
        self.token
    }

    pub fn is_canceled(&self) -> bool {
        self.token.is_canceled()
    }
}

pub trait State {
    /// Outcomes this state may return (besides `failed` and `canceled`,
    /// which every state may produce).
    fn outcomes(&self) -> Vec<String>;

    fn execute(&mut self, bb: &mut Blackboard, ctx: &mut Context<'_>) -> Result<String, StateError>;
}

/// Closure-backed state.
pub struct FnState<F> {
    outcomes: Vec<String>,
    body: F,
}

pub fn state_fn<F>(outcomes: &[&str], body: F) -> FnState<F>
where
    F: FnMut(&mut Blackboard, &mut Context<'_>) -> Result<String, StateError>,
{
    FnState {
        outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
        body,
    }
}

impl<F> State for FnState<F>
where
    F: FnMut(&mut Blackboard, &mut Context<'_>) -> Result<String, StateError>,
{
    fn outcomes(&self) -> Vec<String> {
        self.outcomes.clone()
    }

    fn execute(&mut self, bb: &mut Blackboard, ctx: &mut Context<'_>) -> Result<String, StateError> {
        (self.body)(bb, ctx)
    }
}

/// Result of a top-level [`StateMachine::run`].
#[derive(Debug, Clone)]
pub struct Execution {
    pub outcome: String,
    pub trace: Vec<TraceEntry>,
    /// State failures converted into `failed` outcomes, in order.
    pub failures: Vec<String>,
}

impl Execution {
    /// Paths of entered states, in order.
    pub fn visited(&self) -> Vec<&str> {
        self.trace.iter().map(|e| e.path.as_str()).collect()
    }

    /// Number of times a state with this name (at any depth) was entered.
    pub fn entries_of(&self, state: &str) -> usize {
        self.trace.iter().filter(|e| e.state == state).count()
    }

    pub fn write_trace_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for entry in &self.trace {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub struct StateMachine<'a> {
    name: String,
    states: BTreeMap<String, Box<dyn State + 'a>>,
    transitions: BTreeMap<String, BTreeMap<String, String>>,
    initial: Option<String>,
    outcomes: BTreeSet<String>,
    max_steps: usize,
}

impl<'a> StateMachine<'a> {
    pub fn new(name: &str, outcomes: &[&str]) -> Self {
        StateMachine {
            name: name.to_string(),
            states: BTreeMap::new(),
            transitions: BTreeMap::new(),
            initial: None,
            outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds a state. The first state added is the initial one unless
    /// [`with_initial`](Self::with_initial) says otherwise.
    pub fn add_state(
        mut self,
        name: &str,
        state: impl State + 'a,
        transitions: &[(&str, &str)],
    ) -> Self {
        if self.initial.is_none() {
            self.initial = Some(name.to_string());
        }
        self.states.insert(name.to_string(), Box::new(state));
        self.transitions.insert(
            name.to_string(),
            transitions
                .iter()
                .map(|(o, t)| (o.to_string(), t.to_string()))
                .collect(),
        );
        self
    }

    pub fn with_initial(mut self, name: &str) -> Self {
        self.initial = Some(name.to_string());
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn outcomes(&self) -> &BTreeSet<String> {
        &self.outcomes
    }

    pub fn validate(&self) -> Result<(), Vec<Defect>> {
        let mut defects = Vec::new();
        if self.states.is_empty() {
            defects.push(Defect::NoStates);
        }
        let initial = self.initial.clone().unwrap_or_default();
        if !self.states.is_empty() && !self.states.contains_key(&initial) {
            defects.push(Defect::MissingInitial(initial.clone()));
        }
        for (name, state) in &self.states {
            let declared: BTreeSet<String> = state.outcomes().into_iter().collect();
            let mapped = &self.transitions[name];
            for (outcome, target) in mapped {
                let is_state = self.states.contains_key(target);
                let is_outcome = self.outcomes.contains(target);
                if !is_state && !is_outcome {
                    defects.push(Defect::UndefinedTarget {
                        state: name.clone(),
                        outcome: outcome.clone(),
                        target: target.clone(),
                    });
                } else if is_state && is_outcome {
                    defects.push(Defect::AmbiguousTarget {
                        state: name.clone(),
                        target: target.clone(),
                    });
                }
                let builtin = outcome == FAILED || outcome == CANCELED;
                if !declared.contains(outcome) && !builtin {
                    defects.push(Defect::UndeclaredOutcome {
                        state: name.clone(),
                        outcome: outcome.clone(),
                    });
                }
            }
            for outcome in &declared {
                let terminal_builtin = (outcome == FAILED || outcome == CANCELED)
                    && self.outcomes.contains(outcome);
                if !mapped.contains_key(outcome) && !terminal_builtin {
                    defects.push(Defect::UncoveredOutcome {
                        state: name.clone(),
                        outcome: outcome.clone(),
                    });
                }
            }
        }
        if self.states.contains_key(&initial) {
            let mut seen = BTreeSet::from([initial.clone()]);
            let mut queue = VecDeque::from([initial]);
            while let Some(s) = queue.pop_front() {
                for target in self.transitions[&s].values() {
                    if self.states.contains_key(target) && seen.insert(target.clone()) {
                        queue.push_back(target.clone());
                    }
                }
            }
            for name in self.states.keys() {
                if !seen.contains(name) {
                    defects.push(Defect::Unreachable(name.clone()));
                }
            }
        }
        if defects.is_empty() {
            Ok(())
        } else {
            Err(defects)
        }
    }

    /// Runs from the initial state until a terminal outcome.
    pub fn run(
        &mut self,
        bb: &mut Blackboard,
        token: &CancellationToken,
    ) -> Result<Execution, FsmError> {
        let mut ctx = Context::new(token);
        let outcome = self.run_in(bb, &mut ctx)?;
        Ok(Execution {
            outcome,
            trace: ctx.trace,
            failures: ctx.failures,
        })
    }

    fn run_in(&mut self, bb: &mut Blackboard, ctx: &mut Context<'_>) -> Result<String, FsmError> {
        self.validate().map_err(|defects| FsmError::Invalid {
            machine: self.name.clone(),
            defects,
        })?;
        let mut current = self.initial.clone().expect("validated machine has an initial state");
        let mut steps = 0usize;
        loop {
            if ctx.is_canceled() {
                return Ok(CANCELED.to_string());
            }
            if steps >= self.max_steps {
                ctx.failures
                    .push(format!("{}: step_budget_exhausted", self.name));
                return Ok(FAILED.to_string());
            }
            steps += 1;

            ctx.path.push(current.clone());
            let entry = ctx.trace.len();
            ctx.trace.push(TraceEntry {
                seq: entry,
                path: ctx.path.join("/"),
                state: current.clone(),
                depth: ctx.path.len() - 1,
                t_ms: ctx.started.elapsed().as_secs_f64() * 1e3,
                outcome: None,
            });
            let state = self.states.get_mut(&current).expect("transition targets validated");
            let result = state.execute(bb, ctx);
            ctx.path.pop();
            let outcome = match result {
                Ok(o) => o,
                Err(StateError::Machine(e)) => return Err(e),
                Err(e) => {
                    ctx.failures.push(format!("{current}: {e}"));
                    FAILED.to_string()
                }
            };
            ctx.trace[entry].outcome = Some(outcome.clone());

            if ctx.is_canceled() {
                return Ok(CANCELED.to_string());
            }
            match self.transitions[&current].get(&outcome) {
                Some(target) if self.states.contains_key(target) => current = target.clone(),
                Some(target) => return Ok(target.clone()),
                None if outcome == FAILED || outcome == CANCELED => return Ok(outcome),
                None => {
                    return Err(FsmError::InvalidTransition {
                        state: current,
                        outcome,
                    })
                }
            }
        }
    }
}

/// A machine used as a state of its parent machine.
pub struct Nested<'a>(StateMachine<'a>);

pub fn nest(machine: StateMachine<'_>) -> Nested<'_> {
    Nested(machine)
}

impl State for Nested<'_> {
    fn outcomes(&self) -> Vec<String> {
        self.0.outcomes.iter().cloned().collect()
    }

    fn execute(&mut self, bb: &mut Blackboard, ctx: &mut Context<'_>) -> Result<String, StateError> {
        // The parent has already pushed this state's name onto the path.
        Ok(self.0.run_in(bb, ctx)?)
    }
}
