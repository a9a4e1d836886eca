//! Prompt templates and rendering.
//!
//! Templates are plain text with the placeholders `{actions}`,
//! `{world_state}`, `{goal}` and `{feedback}`. Rendering is a single pass:
//! substituted values are never rescanned, and braces that do not form a
//! known placeholder (such as the JSON examples) are copied verbatim.

use std::path::Path;

use crate::plan::Goal;
use crate::worldstate::WorldState;

use super::actions::ActionRegistry;
use super::PlannerError;

pub const PLANNING_TEMPLATE: &str = include_str!("../../assets/prompts/planning.txt");
pub const GOAL_CHECK_TEMPLATE: &str = include_str!("../../assets/prompts/goal_check.txt");

const PLACEHOLDERS: [&str; 4] = ["actions", "world_state", "goal", "feedback"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub planning: String,
    pub goal_check: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            planning: PLANNING_TEMPLATE.to_string(),
            goal_check: GOAL_CHECK_TEMPLATE.to_string(),
        }
    }
}

fn has(template: &str, name: &str) -> bool {
    template.contains(&format!("{{{name}}}"))
}

impl PromptTemplates {
    /// Reads `planning.txt` and `goal_check.txt` from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, PlannerError> {
        let read = |f: &str| {
            std::fs::read_to_string(dir.join(f))
                .map_err(|e| PlannerError::Template(format!("{}: {e}", dir.join(f).display())))
        };
        let t = PromptTemplates {
            planning: read("planning.txt")?,
            goal_check: read("goal_check.txt")?,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        for name in PLACEHOLDERS {
            if !has(&self.planning, name) {
                return Err(PlannerError::Template(format!("planning template lacks {{{name}}}")));
            }
        }
        for name in ["world_state", "goal"] {
            if !has(&self.goal_check, name) {
                return Err(PlannerError::Template(format!("goal-check template lacks {{{name}}}")));
            }
        }
        Ok(())
    }

    pub fn planning_prompt(
        &self,
        registry: &ActionRegistry,
        world_state: &WorldState,
        goal: &Goal,
        feedback: Option<&str>,
    ) -> String {
        let actions: Vec<String> = registry.specs().iter().map(ToString::to_string).collect();
        let feedback = feedback.map(feedback_line).unwrap_or_default();
        render(
            &self.planning,
            &[
                ("actions", &actions.join("\n")),
                ("world_state", &world_state.items.join("\n")),
                ("goal", &goal.nl_text),
                ("feedback", &feedback),
            ],
        )
    }

    pub fn goal_check_prompt(&self, world_state: &WorldState, goal: &Goal) -> String {
        render(
            &self.goal_check,
            &[
                ("world_state", &world_state.items.join("\n")),
                ("goal", &goal.nl_text),
            ],
        )
    }
}

/// The replanning line inserted at `{feedback}`.
pub fn feedback_line(rationale: &str) -> String {
    format!("The previous plan did not achieve the goal. Reason: {rationale}\n")
}

/// Single-pass substitution of `{name}` placeholders.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Planning prompt from the shipped template.
pub fn build_planning_prompt(
    registry: &ActionRegistry,
    world_state: &WorldState,
    goal: &Goal,
    feedback: Option<&str>,
) -> String {
    PromptTemplates::default().planning_prompt(registry, world_state, goal, feedback)
}

/// Goal-check prompt from the shipped template.
pub fn build_goal_check_prompt(world_state: &WorldState, goal: &Goal) -> String {
    PromptTemplates::default().goal_check_prompt(world_state, goal)
}
