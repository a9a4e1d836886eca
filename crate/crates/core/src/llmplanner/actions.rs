//! Action vocabulary offered to the model, plan validation and a purely
//! symbolic executor.

use std::fmt;

use crate::fsm::CancellationToken;
use crate::kgraph::{Edge, KnowledgeGraph, Triple};
use crate::plan::{ActionCall, Plan};
use crate::sim::{ActionEffect, Executor, SimError};

use super::PlannerError;

/// `(source relation target)` over parameter names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTemplate {
    pub source: String,
    pub relation: String,
    pub target: String,
}

impl EdgeTemplate {
    pub fn new(source: &str, relation: &str, target: &str) -> Self {
        EdgeTemplate {
            source: source.to_string(),
            relation: relation.to_string(),
            target: target.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpec {
    pub name: String,
    /// `(parameter name, node class)` in call order.
    pub params: Vec<(String, String)>,
    pub description: String,
    pub preconditions: Vec<EdgeTemplate>,
    pub add: Vec<EdgeTemplate>,
    pub delete: Vec<EdgeTemplate>,
}

impl ActionSpec {
    fn bind(&self, template: &EdgeTemplate, args: &[String]) -> Triple {
        let lookup = |p: &str| {
            let i = self
                .params
                .iter()
                .position(|(name, _)| name == p)
                .expect("templates reference declared params");
            args[i].clone()
        };
        Triple::new(lookup(&template.source), template.relation.as_str(), lookup(&template.target))
    }

    fn check_templates(&self) -> Result<(), String> {
        for t in self.preconditions.iter().chain(&self.add).chain(&self.delete) {
            for p in [&t.source, &t.target] {
                if !self.params.iter().any(|(name, _)| name == p) {
                    return Err(format!("action `{}` template uses undeclared parameter `{p}`", self.name));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ActionSpec {
    /// `navigate(robot: robot, source: room, target: room): description`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, (p, class)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}: {class}")?;
        }
        write!(f, "): {}", self.description)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionRegistry {
    specs: Vec<ActionSpec>,
}

impl ActionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The two greeting-domain actions.
    pub fn greeting() -> Self {
        let mut r = ActionRegistry::new();
        r.register(ActionSpec {
            name: "navigate".into(),
            params: vec![
                ("robot".into(), "robot".into()),
                ("source".into(), "room".into()),
                ("target".into(), "room".into()),
            ],
            description: "move the robot from the source room, where it currently is, to the target room".into(),
            preconditions: vec![EdgeTemplate::new("robot", "at", "source")],
            add: vec![EdgeTemplate::new("robot", "at", "target")],
            delete: vec![EdgeTemplate::new("robot", "at", "source")],
        })
        .expect("fresh registry");
        r.register(ActionSpec {
            name: "greet".into(),
            params: vec![
                ("robot".into(), "robot".into()),
                ("person".into(), "person".into()),
                ("room".into(), "room".into()),
            ],
            description: "greet a person; the robot and the person must both be in the room".into(),
            preconditions: vec![
                EdgeTemplate::new("robot", "at", "room"),
                EdgeTemplate::new("person", "at", "room"),
            ],
            add: vec![EdgeTemplate::new("robot", "greeted", "person")],
            delete: vec![],
        })
        .expect("fresh registry");
        r
    }

    pub fn register(&mut self, spec: ActionSpec) -> Result<(), PlannerError> {
        if self.get(&spec.name).is_some() {
            return Err(PlannerError::Registry(format!("action `{}` registered twice", spec.name)));
        }
        spec.check_templates().map_err(PlannerError::Registry)?;
        self.specs.push(spec);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ActionSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn specs(&self) -> &[ActionSpec] {
        &self.specs
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    /// Checks name, arity and that every argument is a node of the declared class.
    pub fn validate_call(&self, call: &ActionCall, graph: &KnowledgeGraph) -> Result<(), PlannerError> {
        let spec = self
            .get(&call.action)
            .ok_or_else(|| PlannerError::UnknownAction(call.action.clone()))?;
        if spec.params.len() != call.args.len() {
            return Err(PlannerError::ArityMismatch {
                action: call.action.clone(),
                expected: spec.params.len(),
                got: call.args.len(),
            });
        }
        for (arg, (_, class)) in call.args.iter().zip(&spec.params) {
            let node = graph.node(arg).ok_or_else(|| PlannerError::UnknownArgument {
                action: call.action.clone(),
                arg: arg.clone(),
            })?;
            if &node.node_class != class {
                return Err(PlannerError::ClassMismatch {
                    action: call.action.clone(),
                    arg: arg.clone(),
                    expected: class.clone(),
                    found: node.node_class.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn validate_plan(&self, plan: &Plan, graph: &KnowledgeGraph) -> Result<(), PlannerError> {
        plan.steps.iter().try_for_each(|c| self.validate_call(c, graph))
    }
}

/// Applies registry effect templates to the graph without any notion of
/// time or distance.
#[derive(Debug, Clone)]
pub struct SymbolicExecutor {
    registry: ActionRegistry,
}

impl SymbolicExecutor {
    pub fn new(registry: ActionRegistry) -> Self {
        SymbolicExecutor { registry }
    }
}

impl Executor for SymbolicExecutor {
    fn execute(
        &mut self,
        graph: &mut KnowledgeGraph,
        call: &ActionCall,
        token: &CancellationToken,
    ) -> Result<ActionEffect, SimError> {
        if token.is_canceled() {
            return Err(SimError::Canceled {
                action: call.to_string(),
                at: 0.0,
                partial: Box::default(),
            });
        }
        let spec = self
            .registry
            .get(&call.action)
            .filter(|s| s.params.len() == call.args.len())
            .ok_or_else(|| SimError::UnsupportedAction(call.to_string()))?;
        for pre in &spec.preconditions {
            let t = spec.bind(pre, &call.args);
            if !graph.contains_edge(&t) {
                return Err(SimError::PreconditionViolation {
                    action: call.to_string(),
                    reason: format!("({t}) does not hold"),
                });
            }
        }
        let mut effect = ActionEffect::default();
        for del in &spec.delete {
            let t = spec.bind(del, &call.args);
            if graph.contains_edge(&t) {
                graph.remove_edge(&t.source, &t.relation, &t.target)?;
                effect.removed.push(t);
            }
        }
        for add in &spec.add {
            let t = spec.bind(add, &call.args);
            if !graph.contains_edge(&t) {
                graph.add_edge(Edge::new(t.source.as_str(), t.relation.as_str(), t.target.as_str()))?;
                effect.added.push(t);
            }
        }
        Ok(effect)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apartment;

    #[test]
    fn registry_lines() {
        let r = ActionRegistry::greeting();
        assert_eq!(r.len(), 2);
        assert!(r.specs()[0].to_string().starts_with("navigate(robot: robot, source: room, target: room): "));
        let mut dup = r.clone();
        assert!(dup.register(r.specs()[0].clone()).is_err());
        let mut bad = ActionRegistry::new();
        let mut spec = r.specs()[1].clone();
        spec.name = "wave".into();
        spec.add = vec![EdgeTemplate::new("robot", "waved", "someone")];
        assert!(bad.register(spec).is_err());
    }

    #[test]
    fn call_validation() {
        let r = ActionRegistry::greeting();
        let g = apartment::initial_graph();
        r.validate_call(&ActionCall::new("greet", &["rb1", "angel", "bedroom"]), &g).unwrap();
        assert!(matches!(
            r.validate_call(&ActionCall::new("fly", &["rb1"]), &g),
            Err(PlannerError::UnknownAction(_))
        ));
        assert!(matches!(
            r.validate_call(&ActionCall::new("greet", &["rb1", "angel"]), &g),
            Err(PlannerError::ArityMismatch { expected: 3, got: 2, .. })
        ));
        assert!(matches!(
            r.validate_call(&ActionCall::new("greet", &["rb1", "bob", "bedroom"]), &g),
            Err(PlannerError::UnknownArgument { .. })
        ));
        assert!(matches!(
            r.validate_call(&ActionCall::new("greet", &["rb1", "bedroom", "angel"]), &g),
            Err(PlannerError::ClassMismatch { .. })
        ));
    }

    #[test]
    fn symbolic_execution() {
        let mut ex = SymbolicExecutor::new(ActionRegistry::greeting());
        let mut g = apartment::initial_graph();
        let t = CancellationToken::new();
        let greet = ActionCall::new("greet", &["rb1", "angel", "bedroom"]);
        assert!(matches!(ex.execute(&mut g, &greet, &t), Err(SimError::PreconditionViolation { .. })));
        ex.execute(&mut g, &ActionCall::new("navigate", &["rb1", "entrance", "bedroom"]), &t).unwrap();
        assert_eq!(g.targets("rb1", "at"), ["bedroom"]);
        let e = ex.execute(&mut g, &greet, &t).unwrap();
        assert_eq!(e.added, vec![Triple::new("rb1", "greeted", "angel")]);
        assert_eq!(e.distance_delta, 0.0);
    }
}
