//! Deliberative planning for a service robot.
//!
//! The robot's knowledge lives in a [`kgraph::KnowledgeGraph`]. The LLM
//! planning layer ([`llmplanner`]) renders that graph into textual knowledge
//! items, optionally narrows them with vector retrieval ([`worldstate`]),
//! asks a language model ([`llm`]) for a JSON plan under a grammar
//! constraint, executes the plan in the apartment simulator ([`sim`]) and
//! asks the model again whether the goal holds, replanning with the model's
//! rationale when it does not. The control flow is a hierarchical state
//! machine ([`fsm`]).
//!
//! [`classic`] is the symbolic baseline: a PDDL-subset parser and an optimal
//! STRIPS forward search. [`harness`] runs randomized greeting missions
//! against either pipeline and emits statistics tables.

pub mod apartment;
pub mod classic;
pub mod fsm;
pub mod harness;
pub mod kgraph;
pub mod llm;
pub mod llmplanner;
pub mod plan;
pub mod sim;
pub mod worldstate;

pub use kgraph::{Edge, KnowledgeGraph, Node, Pattern, SharedGraph, Triple};
pub use plan::{ActionCall, Goal, Plan, PlanSource};
