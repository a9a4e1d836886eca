//! Goals and plans shared by the LLM planning layer and the classical baseline.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionCall {
    pub action: String,
    pub args: Vec<String>,
}

impl ActionCall {
    pub fn new(action: impl Into<String>, args: &[&str]) -> Self {
        ActionCall {
            action: action.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

impl fmt::Display for ActionCall {
    /// `(name arg ...)`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.action)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanSource {
    Llm,
    Classic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<ActionCall>,
    pub source: PlanSource,
}

impl Plan {
    pub fn new(steps: Vec<ActionCall>, source: PlanSource) -> Self {
        Plan { steps, source }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `{"plan":[{"action":..,"args":[..]},..]}`
    pub fn to_json(&self) -> String {
        serde_json::json!({ "plan": self.steps }).to_string()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GoalError {
    #[error("cannot read goal from {0:?}")]
    Unrecognized(String),
    #[error("goal `{predicate}` expects {expected} argument(s), got {got}")]
    Arity {
        predicate: String,
        expected: usize,
        got: usize,
    },
}

/// A target predicate together with its natural-language rendering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub predicate: String,
    pub args: Vec<String>,
    pub nl_text: String,
}

impl Goal {
    /// Builds a goal from a predicate, deriving its natural-language text.
    pub fn new(predicate: &str, args: &[&str]) -> Result<Self, GoalError> {
        let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
        let expected = match predicate {
            "greeted" => 1,
            "robot_at" => 2,
            _ => return Err(GoalError::Unrecognized(predicate.to_string())),
        };
        if args.len() != expected {
            return Err(GoalError::Arity {
                predicate: predicate.to_string(),
                expected,
                got: args.len(),
            });
        }
        let nl_text = match predicate {
            "greeted" => format!("greet the person {}", args[0]),
            _ => format!("move the robot {} to the room {}", args[0], args[1]),
        };
        Ok(Goal {
            predicate: predicate.to_string(),
            args,
            nl_text,
        })
    }

    pub fn greeted(person: &str) -> Self {
        Goal::new("greeted", &[person]).expect("valid arity")
    }

    /// Accepts `greeted angel`, `(greeted angel)`, `greet angel`, the
    /// natural-language form `greet the person angel`, and the `robot_at`
    /// equivalents.
    pub fn parse(text: &str) -> Result<Self, GoalError> {
        let unrecognized = || GoalError::Unrecognized(text.to_string());
        let cleaned = text.trim().trim_start_matches('(').trim_end_matches(')');
        let words: Vec<&str> = cleaned.split_whitespace().collect();
        match words.as_slice() {
            ["greet", "the", "person", p] | ["greet", p] | ["greeted", p] => {
                Goal::new("greeted", &[p])
            }
            ["move", "the", "robot", r, "to", "the", "room", w] | ["robot_at", r, w] => {
                Goal::new("robot_at", &[r, w])
            }
            [pred, args @ ..] if *pred == "greeted" || *pred == "robot_at" => Goal::new(pred, args),
            _ => Err(unrecognized()),
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_text_forms() {
        let g = Goal::greeted("angel");
        assert_eq!(g.nl_text, "greet the person angel");
        for form in ["greet angel", "greeted angel", "(greeted angel)", "greet the person angel"] {
            assert_eq!(Goal::parse(form).unwrap(), g, "{form}");
        }
        let r = Goal::parse("robot_at rb1 bedroom").unwrap();
        assert_eq!(r.nl_text, "move the robot rb1 to the room bedroom");
        assert_eq!(Goal::parse(&r.nl_text).unwrap(), r);
        assert!(Goal::parse("dance").is_err());
        assert!(matches!(Goal::parse("greeted a b"), Err(GoalError::Arity { .. })));
    }

    #[test]
    fn plan_json_shape() {
        let p = Plan::new(vec![ActionCall::new("greet", &["rb1", "miguel", "entrance"])], PlanSource::Classic);
        assert_eq!(
            p.to_json(),
            r#"{"plan":[{"action":"greet","args":["rb1","miguel","entrance"]}]}"#
        );
        assert_eq!(p.steps[0].to_string(), "(greet rb1 miguel entrance)");
    }
}
