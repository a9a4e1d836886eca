//! Parsing of model replies.

use serde::{Deserialize, Serialize};

use crate::plan::{ActionCall, Plan, PlanSource};

use super::PlannerError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePlan {
    plan: Vec<WireStep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireStep {
    action: String,
    args: Vec<String>,
}

/// Reads `{"plan":[{"action":"<name>","args":["<id>",...]},...]}`.
pub fn parse_plan(text: &str) -> Result<Plan, PlannerError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| PlannerError::MalformedJson(e.to_string()))?;
    let wire: WirePlan =
        serde_json::from_value(value).map_err(|e| PlannerError::SchemaMismatch(e.to_string()))?;
    Ok(Plan::new(
        wire.plan
            .into_iter()
            .map(|s| ActionCall {
                action: s.action,
                args: s.args,
            })
            .collect(),
        PlanSource::Llm,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalCheckResult {
    pub achieved: bool,
    pub rationale: String,
}

/// Reads `{"achieved": bool, "rationale": "<text>"}`. A negative verdict
/// must come with a reason.
pub fn parse_goal_check(text: &str) -> Result<GoalCheckResult, PlannerError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| PlannerError::MalformedJson(e.to_string()))?;
    let result: GoalCheckResult =
        serde_json::from_value(value).map_err(|e| PlannerError::SchemaMismatch(e.to_string()))?;
    if !result.achieved && result.rationale.trim().is_empty() {
        return Err(PlannerError::SchemaMismatch("negative verdict without rationale".into()));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_plan() {
        let p = parse_plan(r#"{"plan":[{"action":"navigate","args":["rb1","entrance","bedroom"]},{"action":"greet","args":["rb1","angel","bedroom"]}]}"#).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.steps[0], ActionCall::new("navigate", &["rb1", "entrance", "bedroom"]));
        assert_eq!(p.steps[1].action, "greet");
        assert_eq!(p.source, PlanSource::Llm);
    }

    #[test]
    fn empty_and_wrong_shapes() {
        assert!(parse_plan(r#"{"plan":[]}"#).unwrap().is_empty());
        for bad in [
            r#"{"actions":[]}"#,
            r#"{"plan":{}}"#,
            r#"{"plan":[{"action":"greet"}]}"#,
            r#"{"plan":[{"action":"greet","args":[1]}]}"#,
            r#"{"plan":[],"note":"x"}"#,
            r#"[]"#,
        ] {
            assert!(matches!(parse_plan(bad), Err(PlannerError::SchemaMismatch(_))), "{bad}");
        }
        assert!(matches!(parse_plan("I will go"), Err(PlannerError::MalformedJson(_))));
        assert!(matches!(parse_plan(r#"{"plan":["#), Err(PlannerError::MalformedJson(_))));
    }

    #[test]
    fn round_trip_with_plan_json() {
        let p = Plan::new(vec![ActionCall::new("greet", &["rb1", "miguel", "entrance"])], PlanSource::Llm);
        assert_eq!(parse_plan(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn goal_checks() {
        let r = parse_goal_check(r#"{"achieved":true,"rationale":"rb1 greeted angel"}"#).unwrap();
        assert!(r.achieved);
        assert!(parse_goal_check(r#"{"achieved":false,"rationale":""}"#).is_err());
        assert!(matches!(parse_goal_check(r#"{"achieved":"yes","rationale":"x"}"#), Err(PlannerError::SchemaMismatch(_))));
        assert!(matches!(parse_goal_check("yes it is"), Err(PlannerError::MalformedJson(_))));
    }
}
