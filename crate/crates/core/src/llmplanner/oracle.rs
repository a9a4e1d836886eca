//! A scripted "perfect model" for the planning layer.
//!
//! Planning prompts are answered with the classical planner's plan for the
//! live graph; goal-check prompts are answered by looking the goal predicate
//! up in the graph. Both read the shared ground-truth graph rather than the
//! world state in the prompt, so answers do not depend on what retrieval
//! happened to include.

use crate::classic::{plan_for_graph, ClassicError};
use crate::kgraph::{KnowledgeGraph, Pattern, SharedGraph, Triple};
use crate::llm::{GenerationRequest, Responder, ScriptedBackend};
use crate::plan::{Goal, Plan, PlanSource};

use super::parse::GoalCheckResult;

enum PromptKind {
    Plan,
    Check,
}

fn kind(prompt: &str) -> Option<PromptKind> {
    if prompt.contains("\"achieved\"") {
        Some(PromptKind::Check)
    } else if prompt.contains("\"plan\"") {
        Some(PromptKind::Plan)
    } else {
        None
    }
}

/// The goal stated on the prompt's `Goal: ...` line.
pub fn prompt_goal(prompt: &str) -> Option<Goal> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix("Goal: "))
        .and_then(|g| Goal::parse(g).ok())
}

/// Ground-truth verdict for `goal` in `graph`.
pub fn goal_holds(graph: &KnowledgeGraph, goal: &Goal) -> GoalCheckResult {
    match (goal.predicate.as_str(), goal.args.as_slice()) {
        ("greeted", [person]) => {
            let by = graph.matches(&Pattern::any().relation("greeted").target(person.as_str()));
            match by.first() {
                Some(t) => GoalCheckResult {
                    achieved: true,
                    rationale: format!("the world state contains ({t})"),
                },
                None => {
                    let robot_at = graph
                        .matches(&Pattern::any().relation("at"))
                        .into_iter()
                        .filter(|t| graph.node(&t.source).is_some_and(|n| n.node_class == "robot"))
                        .map(|t| t.to_string())
                        .collect::<Vec<_>>()
                        .join(", ");
                    GoalCheckResult {
                        achieved: false,
                        rationale: format!("nobody has greeted {person} yet; robot position: {robot_at}"),
                    }
                }
            }
        }
        ("robot_at", [robot, room]) => {
            let t = Triple::new(robot.as_str(), "at", room.as_str());
            if graph.contains_edge(&t) {
                GoalCheckResult {
                    achieved: true,
                    rationale: format!("the world state contains ({t})"),
                }
            } else {
                GoalCheckResult {
                    achieved: false,
                    rationale: format!("{robot} is at {}, not {room}", graph.targets(robot, "at").join(", ")),
                }
            }
        }
        _ => GoalCheckResult {
            achieved: false,
            rationale: format!("unsupported goal {goal}"),
        },
    }
}

pub struct OracleResponder {
    graph: SharedGraph,
}

impl OracleResponder {
    pub fn new(graph: SharedGraph) -> Self {
        OracleResponder { graph }
    }
}

impl Responder for OracleResponder {
    fn respond(&self, request: &GenerationRequest) -> Option<String> {
        let kind = kind(&request.prompt)?;
        let goal = prompt_goal(&request.prompt)?;
        let graph = self.graph.read().expect("graph lock");
        Some(match kind {
            PromptKind::Plan => match plan_for_graph(&graph, &goal) {
                Ok(plan) => plan.to_json(),
                Err(ClassicError::Unsolvable) | Err(_) => Plan::new(vec![], PlanSource::Llm).to_json(),
            },
            PromptKind::Check => {
                serde_json::to_string(&goal_holds(&graph, &goal)).expect("plain struct serializes")
            }
        })
    }
}

/// Scripted backend answering from `graph`.
pub fn oracle_backend(graph: SharedGraph) -> ScriptedBackend {
    ScriptedBackend::new().with_responder(OracleResponder::new(graph))
}
