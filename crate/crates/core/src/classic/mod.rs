//! Classical planning baseline: a STRIPS/typing subset of PDDL, exhaustive
//! grounding and breadth-first forward search.
//!
//! The shipped greeting domain (`assets/greeting.pddl`) has two actions,
//! `navigate` and `greet`. [`graph_to_problem`] turns a knowledge graph and a
//! goal into a problem for it, and [`plan`] returns a step-optimal plan.

mod bridge;
mod pddl;
mod search;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use bridge::{goal_atom, graph_to_problem, plan_for_graph};
pub use pddl::{parse_domain, parse_problem};
pub use search::{apply, ground_actions, ground_call, plan, search, validate_plan, GroundAction, GroundState};

pub const GREETING_DOMAIN: &str = include_str!("../../assets/greeting.pddl");

/// The parsed greeting domain.
pub fn greeting_domain() -> Domain {
    parse_domain(GREETING_DOMAIN).expect("shipped domain parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Location {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicError {
    #[error("{loc}: lexical error: {msg}")]
    Lex { loc: Location, msg: String },
    #[error("{loc}: parse error: {msg}")]
    Parse { loc: Location, msg: String },
    #[error("{loc}: semantic error: {msg}")]
    Semantic { loc: Location, msg: String },
    #[error("vocabulary error: {0}")]
    Vocabulary(String),
    #[error("no plan reaches the goal")]
    Unsolvable,
    #[error("precondition {atom} of {action} does not hold")]
    PreconditionUnsatisfied { action: String, atom: Atom },
    #[error("invalid action call {call}: {reason}")]
    InvalidCall { call: String, reason: String },
    #[error("goal atom {0} does not hold after the plan")]
    GoalNotReached(Atom),
}

impl ClassicError {
    pub fn location(&self) -> Option<Location> {
        match self {
            ClassicError::Lex { loc, .. }
            | ClassicError::Parse { loc, .. }
            | ClassicError::Semantic { loc, .. } => Some(*loc),
            _ => None,
        }
    }

    /// Message without the location prefix.
    pub fn message(&self) -> String {
        match self {
            ClassicError::Lex { msg, .. } => format!("lexical error: {msg}"),
            ClassicError::Parse { msg, .. } => format!("parse error: {msg}"),
            ClassicError::Semantic { msg, .. } => format!("semantic error: {msg}"),
            other => other.to_string(),
        }
    }
}

/// A predicate applied to arguments. In action schemas arguments are
/// `?variables`; in problems and states they are object names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedParam {
    /// Includes the leading `?`.
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedParam>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub precondition: Vec<Atom>,
    pub add: Vec<Atom>,
    pub delete: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)` in declaration order; the root type is `object`.
    pub types: Vec<(String, String)>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == "object" || self.types.iter().any(|(t, _)| t == name)
    }

    /// Whether `sub` is `sup` or one of its descendants.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut current = sub;
        for _ in 0..=self.types.len() {
            if current == sup {
                return true;
            }
            match self.types.iter().find(|(t, _)| t == current) {
                Some((_, parent)) => current = parent,
                None => return false,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// Object name to type.
    pub objects: std::collections::BTreeMap<String, String>,
    pub init: std::collections::BTreeSet<Atom>,
    pub goal: Vec<Atom>,
}

fn write_params(f: &mut fmt::Formatter<'_>, params: &[TypedParam]) -> fmt::Result {
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{} - {}", p.name, p.type_name)?;
    }
    Ok(())
}

fn write_conjunction(f: &mut fmt::Formatter<'_>, atoms: &[Atom], negated: &[Atom]) -> fmt::Result {
    f.write_str("(and")?;
    for a in atoms {
        write!(f, " {a}")?;
    }
    for a in negated {
        write!(f, " (not {a})")?;
    }
    f.write_str(")")
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            f.write_str("  (:requirements")?;
            for r in &self.requirements {
                write!(f, " :{r}")?;
            }
            f.write_str(")\n")?;
        }
        if !self.types.is_empty() {
            f.write_str("  (:types")?;
            for (t, parent) in &self.types {
                write!(f, " {t} - {parent}")?;
            }
            f.write_str(")\n")?;
        }
        f.write_str("  (:predicates")?;
        for p in &self.predicates {
            write!(f, "\n    ({}", p.name)?;
            if !p.params.is_empty() {
                f.write_str(" ")?;
                write_params(f, &p.params)?;
            }
            f.write_str(")")?;
        }
        f.write_str(")")?;
        for a in &self.actions {
            write!(f, "\n  (:action {}\n    :parameters (", a.name)?;
            write_params(f, &a.params)?;
            f.write_str(")\n    :precondition ")?;
            write_conjunction(f, &a.precondition, &[])?;
            f.write_str("\n    :effect ")?;
            write_conjunction(f, &a.add, &a.delete)?;
            f.write_str(")")?;
        }
        f.write_str(")\n")
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        f.write_str("  (:objects")?;
        for (o, t) in &self.objects {
            write!(f, " {o} - {t}")?;
        }
        f.write_str(")\n  (:init")?;
        for a in &self.init {
            write!(f, "\n    {a}")?;
        }
        f.write_str(")\n  (:goal ")?;
        write_conjunction(f, &self.goal, &[])?;
        f.write_str("))\n")
    }
}
