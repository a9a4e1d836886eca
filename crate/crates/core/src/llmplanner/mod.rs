//! The LLM planning layer.
//!
//! [`run_layer`] drives one goal through a hierarchical state machine:
//!
//! ```text
//! PLANNING ──planned──> EXECUTING_PLAN ──executed──> CHECKING_GOAL ──achieved──> succeeded
//!    ^                        │                           │
//!    │                  execution_failed             not_achieved
//!    └────── replan ──── REPLANNING <─────────────────────┘
//! ```
//!
//! PLANNING is itself a machine (build world state, generate, parse, retry
//! on malformed output), and so is CHECKING_GOAL (build world state, ask,
//! parse, retry once). Variants without goal checking go straight from
//! EXECUTING_PLAN to success.

mod actions;
mod oracle;
mod parse;
mod prompt;
mod trace;

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::fsm::{self, nest, state_fn, Blackboard, CancellationToken, FsmError, StateError, StateMachine};
use crate::kgraph::SharedGraph;
use crate::llm::{generate, GenerationRequest, GrammarSpec, LlmBackend, LlmError};
use crate::plan::{ActionCall, Goal, Plan};
use crate::sim::{Executor, SimError};
use crate::worldstate::{Mode, WorldState, WorldStateBuilder, WorldStateError};

pub use actions::{ActionRegistry, ActionSpec, EdgeTemplate, SymbolicExecutor};
pub use oracle::{goal_holds, oracle_backend, prompt_goal, OracleResponder};
pub use parse::{parse_goal_check, parse_plan, GoalCheckResult};
pub use prompt::{build_goal_check_prompt, build_planning_prompt, feedback_line, render, PromptTemplates};
pub use trace::{ActionStatus, MissionTrace, Purpose, TraceEvent};

pub const DEFAULT_RETRIEVAL_K: usize = 10;
pub const DEFAULT_REPLAN_LIMIT: usize = 3;
pub const DEFAULT_PARSE_RETRY: usize = 2;
/// Rationale used when the goal check produced no usable verdict.
pub const UNPARSEABLE_CHECK: &str = "goal check unparseable";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("reply does not match the schema: {0}")]
    SchemaMismatch(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("`{action}` takes {expected} argument(s), got {got}")]
    ArityMismatch { action: String, expected: usize, got: usize },
    #[error("`{action}` argument `{arg}` is not a node in the graph")]
    UnknownArgument { action: String, arg: String },
    #[error("`{action}` argument `{arg}` is a {found}, expected a {expected}")]
    ClassMismatch {
        action: String,
        arg: String,
        expected: String,
        found: String,
    },
    #[error("action registry: {0}")]
    Registry(String),
    #[error("prompt template: {0}")]
    Template(String),
    #[error("invalid layer configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid goal: {0}")]
    InvalidGoal(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    WorldState(#[from] WorldStateError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
}

/// The four integration variants: with or without retrieval, with or
/// without goal checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Fi,
    Nri,
    Nci,
    Nrnci,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Fi, Variant::Nri, Variant::Nci, Variant::Nrnci];

    pub fn rag(self) -> bool {
        matches!(self, Variant::Fi | Variant::Nci)
    }

    pub fn goal_check(self) -> bool {
        matches!(self, Variant::Fi | Variant::Nri)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Fi => "FI",
            Variant::Nri => "NRI",
            Variant::Nci => "NCI",
            Variant::Nrnci => "NRNCI",
        })
    }
}

impl FromStr for Variant {
    type Err = PlannerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PlannerError::InvalidConfig(format!("unknown variant `{s}` (expected FI, NRI, NCI or NRNCI)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    pub variant: Variant,
    pub retrieval_k: usize,
    pub replan_limit: usize,
    pub parse_retry: usize,
    pub plan_max_tokens: u32,
    pub check_max_tokens: u32,
    pub temperature: f64,
    pub templates: PromptTemplates,
    pub registry: ActionRegistry,
}

impl Default for LayerConfig {
    fn default() -> Self {
        LayerConfig::new(Variant::Fi)
    }
}

impl LayerConfig {
    pub fn new(variant: Variant) -> Self {
        LayerConfig {
            variant,
            retrieval_k: DEFAULT_RETRIEVAL_K,
            replan_limit: DEFAULT_REPLAN_LIMIT,
            parse_retry: DEFAULT_PARSE_RETRY,
            plan_max_tokens: crate::llm::DEFAULT_PLAN_MAX_TOKENS,
            check_max_tokens: crate::llm::DEFAULT_CHECK_MAX_TOKENS,
            temperature: 0.0,
            templates: PromptTemplates::default(),
            registry: ActionRegistry::greeting(),
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.variant.rag() && self.retrieval_k == 0 {
            return Err(PlannerError::InvalidConfig("retrieval_k must be at least 1".into()));
        }
        if self.registry.is_empty() {
            return Err(PlannerError::InvalidConfig("action registry is empty".into()));
        }
        if self.plan_max_tokens == 0 || self.check_max_tokens == 0 {
            return Err(PlannerError::InvalidConfig("token limits must be positive".into()));
        }
        self.templates.validate()
    }

    pub fn world_mode(&self) -> Mode {
        if self.variant.rag() {
            Mode::Retrieved(self.retrieval_k)
        } else {
            Mode::Full
        }
    }
}

/// Asks `backend` whether `goal` holds in `world_state`. Output that is not
/// JSON is reported as [`PlannerError::SchemaMismatch`].
pub fn check_goal(
    backend: &dyn LlmBackend,
    world_state: &WorldState,
    goal: &Goal,
) -> Result<GoalCheckResult, PlannerError> {
    let request = GenerationRequest::new(build_goal_check_prompt(world_state, goal))
        .with_grammar(GrammarSpec::json())
        .with_max_tokens(crate::llm::DEFAULT_CHECK_MAX_TOKENS);
    match generate(backend, &request) {
        Ok(reply) => parse_goal_check(&reply.text).map_err(|e| match e {
            PlannerError::MalformedJson(m) => PlannerError::SchemaMismatch(m),
            other => other,
        }),
        Err(LlmError::GrammarViolation { text, .. }) => {
            Err(PlannerError::SchemaMismatch(format!("reply is not a JSON object: {text:?}")))
        }
        Err(e) => Err(e.into()),
    }
}

/// Result of pursuing one goal.
#[derive(Debug, Clone)]
pub struct LayerRun {
    /// `succeeded`, `failed` or `canceled`.
    pub outcome: String,
    pub planning_rounds: usize,
    pub plan_calls: usize,
    pub check_calls: usize,
    /// Sum of backend-reported latencies.
    pub llm_latency: Duration,
    /// Accepted plans, one per successful planning round.
    pub plans: Vec<Plan>,
    pub executed: Vec<ActionCall>,
    pub trace: MissionTrace,
    pub failures: Vec<String>,
    /// Why the run failed, when it did.
    pub reason: Option<String>,
}

impl LayerRun {
    pub fn succeeded(&self) -> bool {
        self.outcome == fsm::SUCCEEDED
    }
}

mod keys {
    pub const FEEDBACK: &str = "feedback";
    pub const WORLD_STATE: &str = "world_state";
    pub const RAW: &str = "raw_reply";
    pub const PLAN: &str = "plan";
    pub const PARSE_ATTEMPTS: &str = "parse_attempts";
    pub const CHECK_ATTEMPTS: &str = "check_attempts";
    pub const CHECK: &str = "check";
    pub const REPLANS: &str = "replans";
}

struct Env<'a> {
    graph: &'a SharedGraph,
    goal: &'a Goal,
    backend: &'a dyn LlmBackend,
    executor: &'a mut dyn Executor,
    config: &'a LayerConfig,
    grammar: GrammarSpec,
    builder: WorldStateBuilder,
    trace: MissionTrace,
    round: usize,
    plan_calls: usize,
    check_calls: usize,
    llm_latency: Duration,
    plans: Vec<Plan>,
    executed: Vec<ActionCall>,
    reason: Option<String>,
}

impl Env<'_> {
    fn world_state(&mut self) -> Result<WorldState, StateError> {
        let graph = self.graph.read().expect("graph lock");
        self.builder
            .build(&graph, &self.goal.nl_text, self.config.world_mode(), self.backend)
            .map_err(|e| StateError::Failed(e.to_string()))
    }

    /// Sends a grammar-constrained prompt. Grammar violations are stored as
    /// a rejected reply; any other backend error fails the state.
    fn ask(&mut self, purpose: Purpose, prompt: String, max_tokens: u32) -> Result<Result<String, String>, StateError> {
        let round = self.round;
        self.trace.push(TraceEvent::Prompt {
            round,
            purpose,
            text: prompt.clone(),
        });
        match purpose {
            Purpose::Plan => self.plan_calls += 1,
            Purpose::Check => self.check_calls += 1,
        }
        let mut request = GenerationRequest::new(prompt)
            .with_grammar(self.grammar.clone())
            .with_max_tokens(max_tokens);
        request.temperature = self.config.temperature;
        match generate(self.backend, &request) {
            Ok(reply) => {
                self.llm_latency += reply.latency;
                self.trace.push(TraceEvent::Response {
                    round,
                    purpose,
                    text: reply.text.clone(),
                    tokens: reply.token_count,
                    latency_s: reply.latency.as_secs_f64(),
                });
                Ok(Ok(reply.text))
            }
            Err(e @ LlmError::GrammarViolation { .. }) => {
                self.trace.push(TraceEvent::BackendError {
                    round,
                    purpose,
                    error: e.to_string(),
                });
                Ok(Err(e.to_string()))
            }
            Err(e) => {
                self.trace.push(TraceEvent::BackendError {
                    round,
                    purpose,
                    error: e.to_string(),
                });
                self.reason = Some(e.to_string());
                Err(StateError::Failed(e.to_string()))
            }
        }
    }
}

fn planning_machine<'s>(env: &'s RefCell<Env<'_>>) -> StateMachine<'s> {
    StateMachine::new("PLANNING", &["planned", fsm::FAILED])
        .add_state(
            "BUILDING_WORLD_STATE",
            state_fn(&["built"], move |bb, _| {
                let mut e = env.borrow_mut();
                e.round += 1;
                bb.set(keys::PARSE_ATTEMPTS, 0usize);
                let ws = e.world_state()?;
                bb.set(keys::WORLD_STATE, ws);
                Ok("built".into())
            }),
            &[("built", "GENERATING_PLAN")],
        )
        .add_state(
            "GENERATING_PLAN",
            state_fn(&["generated"], move |bb, _| {
                let mut e = env.borrow_mut();
                let feedback: Option<String> = bb.get::<Option<String>>(keys::FEEDBACK)?.clone();
                let ws: &WorldState = bb.get(keys::WORLD_STATE)?;
                let prompt = e
                    .config
                    .templates
                    .planning_prompt(&e.config.registry, ws, e.goal, feedback.as_deref());
                let max = e.config.plan_max_tokens;
                let raw = e.ask(Purpose::Plan, prompt, max)?;
                bb.set(keys::RAW, raw);
                Ok("generated".into())
            }),
            &[("generated", "PARSING_PLAN")],
        )
        .add_state(
            "PARSING_PLAN",
            state_fn(&["parsed", "invalid"], move |bb, _| {
                let mut e = env.borrow_mut();
                let raw: Result<String, String> = bb.take(keys::RAW)?;
                let parsed = raw
                    .map_err(PlannerError::SchemaMismatch)
                    .and_then(|text| parse_plan(&text))
                    .and_then(|plan| {
                        let graph = e.graph.read().expect("graph lock");
                        e.config.registry.validate_plan(&plan, &graph).map(|_| plan)
                    });
                let round = e.round;
                match parsed {
                    Ok(plan) => {
                        e.trace.push(TraceEvent::Plan {
                            round,
                            steps: plan.steps.clone(),
                        });
                        e.plans.push(plan.clone());
                        bb.set(keys::PLAN, plan);
                        Ok("parsed".into())
                    }
                    Err(err) => {
                        e.trace.push(TraceEvent::Rejected {
                            round,
                            purpose: Purpose::Plan,
                            error: err.to_string(),
                        });
                        Ok("invalid".into())
                    }
                }
            }),
            &[("parsed", "planned"), ("invalid", "RETRYING_PLAN")],
        )
        .add_state(
            "RETRYING_PLAN",
            state_fn(&["retry", "exhausted"], move |bb, _| {
                let mut e = env.borrow_mut();
                let attempts: &mut usize = bb.get_mut(keys::PARSE_ATTEMPTS)?;
                *attempts += 1;
                if *attempts <= e.config.parse_retry {
                    Ok("retry".into())
                } else {
                    e.reason = Some(format!("no valid plan after {} attempt(s)", *attempts));
                    Ok("exhausted".into())
                }
            }),
            &[("retry", "GENERATING_PLAN"), ("exhausted", fsm::FAILED)],
        )
}

fn checking_machine<'s>(env: &'s RefCell<Env<'_>>) -> StateMachine<'s> {
    StateMachine::new("CHECKING_GOAL", &["achieved", "not_achieved", fsm::FAILED])
        .add_state(
            "BUILDING_WORLD_STATE",
            state_fn(&["built"], move |bb, _| {
                let mut e = env.borrow_mut();
                bb.set(keys::CHECK_ATTEMPTS, 0usize);
                let ws = e.world_state()?;
                bb.set(keys::WORLD_STATE, ws);
                Ok("built".into())
            }),
            &[("built", "GENERATING_CHECK")],
        )
        .add_state(
            "GENERATING_CHECK",
            state_fn(&["generated"], move |bb, _| {
                let mut e = env.borrow_mut();
                let ws: &WorldState = bb.get(keys::WORLD_STATE)?;
                let prompt = e.config.templates.goal_check_prompt(ws, e.goal);
                let max = e.config.check_max_tokens;
                let raw = e.ask(Purpose::Check, prompt, max)?;
                bb.set(keys::RAW, raw);
                Ok("generated".into())
            }),
            &[("generated", "PARSING_CHECK")],
        )
        .add_state(
            "PARSING_CHECK",
            state_fn(&["achieved", "not_achieved", "invalid"], move |bb, _| {
                let mut e = env.borrow_mut();
                let raw: Result<String, String> = bb.take(keys::RAW)?;
                let round = e.round;
                match raw
                    .map_err(PlannerError::SchemaMismatch)
                    .and_then(|text| parse_goal_check(&text))
                {
                    Ok(check) => {
                        e.trace.push(TraceEvent::Check {
                            round,
                            achieved: check.achieved,
                            rationale: check.rationale.clone(),
                        });
                        let outcome = if check.achieved { "achieved" } else { "not_achieved" };
                        bb.set(keys::FEEDBACK, Some(check.rationale.clone()));
                        bb.set(keys::CHECK, check);
                        Ok(outcome.into())
                    }
                    Err(err) => {
                        e.trace.push(TraceEvent::Rejected {
                            round,
                            purpose: Purpose::Check,
                            error: err.to_string(),
                        });
                        Ok("invalid".into())
                    }
                }
            }),
            &[
                ("achieved", "achieved"),
                ("not_achieved", "not_achieved"),
                ("invalid", "RETRYING_CHECK"),
            ],
        )
        .add_state(
            "RETRYING_CHECK",
            state_fn(&["retry", "unparseable"], move |bb, _| {
                let mut e = env.borrow_mut();
                let attempts: &mut usize = bb.get_mut(keys::CHECK_ATTEMPTS)?;
                *attempts += 1;
                if *attempts <= 1 {
                    return Ok("retry".into());
                }
                let round = e.round;
                e.trace.push(TraceEvent::Check {
                    round,
                    achieved: false,
                    rationale: UNPARSEABLE_CHECK.into(),
                });
                bb.set(keys::FEEDBACK, Some(UNPARSEABLE_CHECK.to_string()));
                bb.set(
                    keys::CHECK,
                    GoalCheckResult {
                        achieved: false,
                        rationale: UNPARSEABLE_CHECK.into(),
                    },
                );
                Ok("unparseable".into())
            }),
            &[("retry", "GENERATING_CHECK"), ("unparseable", "not_achieved")],
        )
}

fn execute_plan(env: &RefCell<Env<'_>>, bb: &mut Blackboard, token: &CancellationToken) -> Result<String, StateError> {
    let mut guard = env.borrow_mut();
    let e = &mut *guard;
    let plan: Plan = bb.get::<Plan>(keys::PLAN)?.clone();
    let round = e.round;
    for call in &plan.steps {
        if token.is_canceled() {
            return Ok(fsm::CANCELED.into());
        }
        let result = {
            let mut graph = e.graph.write().expect("graph lock");
            e.executor.execute(&mut graph, call, token)
        };
        match result {
            Ok(effect) => {
                e.trace.push(TraceEvent::Action {
                    round,
                    call: call.to_string(),
                    status: ActionStatus::Completed,
                    detail: None,
                    clock_delta: effect.clock_delta,
                    distance_delta: effect.distance_delta,
                });
                e.executed.push(call.clone());
            }
            Err(SimError::Canceled { partial, .. }) => {
                e.trace.push(TraceEvent::Action {
                    round,
                    call: call.to_string(),
                    status: ActionStatus::Canceled,
                    detail: None,
                    clock_delta: partial.clock_delta,
                    distance_delta: partial.distance_delta,
                });
                return Ok(fsm::CANCELED.into());
            }
            Err(err) => {
                e.trace.push(TraceEvent::Action {
                    round,
                    call: call.to_string(),
                    status: ActionStatus::Failed,
                    detail: Some(err.to_string()),
                    clock_delta: 0.0,
                    distance_delta: 0.0,
                });
                bb.set(keys::FEEDBACK, Some(format!("executing {call} failed: {err}")));
                return Ok("execution_failed".into());
            }
        }
    }
    Ok("executed".into())
}

/// Pursues `goal` until it is achieved, the retry budgets run out, or
/// `token` is canceled.
///
/// `executor` carries out plan steps against `graph`; the graph is locked
/// for writing only while a single step executes, so a backend holding the
/// same graph can read it during generation.
pub fn run_layer(
    graph: &SharedGraph,
    goal: &Goal,
    backend: &dyn LlmBackend,
    executor: &mut dyn Executor,
    config: &LayerConfig,
    token: &CancellationToken,
) -> Result<LayerRun, PlannerError> {
    config.validate()?;
    {
        let g = graph.read().expect("graph lock");
        if goal.nl_text.trim().is_empty() {
            return Err(PlannerError::InvalidGoal("empty goal text".into()));
        }
        if let Some(missing) = goal.args.iter().find(|a| !g.contains_node(a)) {
            return Err(PlannerError::InvalidGoal(format!("`{missing}` is not a node in the graph")));
        }
    }
    let env = RefCell::new(Env {
        graph,
        goal,
        backend,
        executor,
        config,
        grammar: GrammarSpec::json(),
        builder: WorldStateBuilder::new(),
        trace: MissionTrace::default(),
        round: 0,
        plan_calls: 0,
        check_calls: 0,
        llm_latency: Duration::ZERO,
        plans: Vec::new(),
        executed: Vec::new(),
        reason: None,
    });

    let after_execution = if config.variant.goal_check() {
        "CHECKING_GOAL"
    } else {
        fsm::SUCCEEDED
    };
    let env_ref = &env;
    let mut root = StateMachine::new("LLM_PLANNING_LAYER", &[fsm::SUCCEEDED, fsm::FAILED, fsm::CANCELED])
        .add_state(
            "PLANNING",
            nest(planning_machine(env_ref)),
            &[("planned", "EXECUTING_PLAN"), (fsm::FAILED, fsm::FAILED)],
        )
        .add_state(
            "EXECUTING_PLAN",
            state_fn(&["executed", "execution_failed", fsm::CANCELED], move |bb, ctx| {
                let token = ctx.token().clone();
                execute_plan(env_ref, bb, &token)
            }),
            &[
                ("executed", after_execution),
                ("execution_failed", "REPLANNING"),
                (fsm::CANCELED, fsm::CANCELED),
            ],
        );
    if config.variant.goal_check() {
        root = root.add_state(
            "CHECKING_GOAL",
            nest(checking_machine(env_ref)),
            &[
                ("achieved", fsm::SUCCEEDED),
                ("not_achieved", "REPLANNING"),
                (fsm::FAILED, fsm::FAILED),
            ],
        );
    }
    root = root.add_state(
        "REPLANNING",
        state_fn(&["replan", "exhausted"], move |bb, _| {
            let mut e = env_ref.borrow_mut();
            let limit = e.config.replan_limit;
            let replans: &mut usize = bb.get_mut(keys::REPLANS)?;
            if *replans >= limit {
                e.reason = Some(format!("goal not achieved after {limit} replanning round(s)"));
                return Ok("exhausted".into());
            }
            *replans += 1;
            let feedback = bb
                .get::<Option<String>>(keys::FEEDBACK)?
                .clone()
                .unwrap_or_default();
            let round = e.round;
            e.trace.push(TraceEvent::Replan { round, feedback });
            Ok("replan".into())
        }),
        &[("replan", "PLANNING"), ("exhausted", fsm::FAILED)],
    );

    let mut bb = Blackboard::new();
    bb.set(keys::FEEDBACK, None::<String>);
    bb.set(keys::REPLANS, 0usize);
    let execution = root.run(&mut bb, token)?;
    drop(root);

    let env = env.into_inner();
    let mut trace = env.trace;
    let reason = (execution.outcome == fsm::FAILED)
        .then(|| env.reason.or_else(|| execution.failures.last().cloned()))
        .flatten();
    trace.push(TraceEvent::Outcome {
        outcome: execution.outcome.clone(),
        reason: reason.clone(),
    });
    trace.events.extend(execution.trace.iter().cloned().map(TraceEvent::State));
    Ok(LayerRun {
        planning_rounds: execution.entries_of("PLANNING"),
        outcome: execution.outcome,
        plan_calls: env.plan_calls,
        check_calls: env.check_calls,
        llm_latency: env.llm_latency,
        plans: env.plans,
        executed: env.executed,
        trace,
        failures: execution.failures,
        reason,
    })
}
