//! Prompts rendered from the shipped templates, compared with reviewed copies
//! under `tests/golden`. Set `NLPLAN_BLESS=1` to rewrite the copies.

use std::path::PathBuf;

use nlplan_core::apartment;
use nlplan_core::llm::BagOfWordsEmbedder;
use nlplan_core::llmplanner::{build_goal_check_prompt, build_planning_prompt, ActionRegistry};
use nlplan_core::worldstate::{build_world_state, Mode};
use nlplan_core::Goal;

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("NLPLAN_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from the golden copy");
}

fn world_state(query: &str, mode: Mode) -> nlplan_core::worldstate::WorldState {
    build_world_state(&apartment::initial_graph(), query, mode, &BagOfWordsEmbedder::default()).unwrap()
}

#[test]
fn planning_full() {
    let goal = Goal::greeted("angel");
    let ws = world_state(&goal.nl_text, Mode::Full);
    check("planning_full.txt", &build_planning_prompt(&ActionRegistry::greeting(), &ws, &goal, None));
}

#[test]
fn planning_retrieved_with_feedback() {
    let goal = Goal::greeted("vicente");
    let ws = world_state(&goal.nl_text, Mode::Retrieved(10));
    let prompt = build_planning_prompt(
        &ActionRegistry::greeting(),
        &ws,
        &goal,
        Some("nobody has greeted vicente yet; robot position: (rb1 at entrance)"),
    );
    check("planning_retrieved_feedback.txt", &prompt);
}

#[test]
fn goal_check_full() {
    let goal = Goal::greeted("fran");
    let ws = world_state(&goal.nl_text, Mode::Full);
    check("goal_check_full.txt", &build_goal_check_prompt(&ws, &goal));
}
