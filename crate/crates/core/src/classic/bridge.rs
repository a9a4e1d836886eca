//! Knowledge graph to greeting-domain problem translation.

use std::collections::{BTreeMap, BTreeSet};

use super::{greeting_domain, plan, Atom, ClassicError, Problem};
use crate::kgraph::KnowledgeGraph;
use crate::plan::{Goal, Plan};

/// Node classes that become typed objects.
const OBJECT_CLASSES: [&str; 3] = ["robot", "person", "room"];
/// Node classes and relations that only describe structure.
const STRUCTURAL_CLASSES: [&str; 1] = ["house"];
const STRUCTURAL_RELATIONS: [&str; 1] = ["in"];

fn vocab(msg: String) -> ClassicError {
    ClassicError::Vocabulary(msg)
}

/// The goal as a ground atom, checked against the problem's objects.
pub fn goal_atom(goal: &Goal, objects: &BTreeMap<String, String>) -> Result<Atom, ClassicError> {
    let expected: &[&str] = match goal.predicate.as_str() {
        "greeted" => &["person"],
        "robot_at" => &["robot", "room"],
        other => return Err(vocab(format!("goal predicate `{other}` has no mapping"))),
    };
    if expected.len() != goal.args.len() {
        return Err(vocab(format!("goal {goal} has the wrong arity")));
    }
    for (arg, class) in goal.args.iter().zip(expected) {
        match objects.get(arg) {
            Some(c) if c == class => {}
            Some(c) => return Err(vocab(format!("goal argument `{arg}` is a {c}, expected {class}"))),
            None => return Err(vocab(format!("goal argument `{arg}` is not in the graph"))),
        }
    }
    Ok(Atom {
        predicate: goal.predicate.clone(),
        args: goal.args.clone(),
    })
}

/// Builds a greeting-domain problem from a graph snapshot.
///
/// Robots, people and rooms become objects; `at` edges become `robot_at` or
/// `person_at` depending on the source's class, and `(robot greeted person)`
/// edges become `(greeted person)`. House nodes and room `in` edges are
/// skipped. Anything else is a [`ClassicError::Vocabulary`] error.
pub fn graph_to_problem(graph: &KnowledgeGraph, goal: &Goal) -> Result<Problem, ClassicError> {
    let mut objects = BTreeMap::new();
    for node in graph.nodes() {
        let class = node.node_class.as_str();
        if OBJECT_CLASSES.contains(&class) {
            objects.insert(node.id.clone(), class.to_string());
        } else if !STRUCTURAL_CLASSES.contains(&class) {
            return Err(vocab(format!("node `{}` has class `{class}`, which has no mapping", node.id)));
        }
    }
    let class_of = |id: &str| graph.node(id).map(|n| n.node_class.as_str()).unwrap_or("");
    let mut init = BTreeSet::new();
    for edge in graph.edges() {
        let (s, t) = (edge.source.as_str(), edge.target.as_str());
        match (edge.relation.as_str(), class_of(s), class_of(t)) {
            ("at", "robot", "room") => {
                init.insert(Atom::new("robot_at", &[s, t]));
            }
            ("at", "person", "room") => {
                init.insert(Atom::new("person_at", &[s, t]));
            }
            ("greeted", "robot", "person") => {
                init.insert(Atom::new("greeted", &[t]));
            }
            (r, _, _) if STRUCTURAL_RELATIONS.contains(&r) => {}
            (r, sc, tc) => {
                return Err(vocab(format!(
                    "edge ({s} {r} {t}) between {sc} and {tc} has no mapping"
                )))
            }
        }
    }
    let goal = vec![goal_atom(goal, &objects)?];
    Ok(Problem {
        name: "greeting-mission".to_string(),
        domain: "greeting".to_string(),
        objects,
        init,
        goal,
    })
}

/// `graph_to_problem` followed by search in the greeting domain.
pub fn plan_for_graph(graph: &KnowledgeGraph, goal: &Goal) -> Result<Plan, ClassicError> {
    plan(&greeting_domain(), &graph_to_problem(graph, goal)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apartment;
    use crate::classic::parse_problem;
    use crate::kgraph::{Edge, Node};

    #[test]
    fn apartment_problem() {
        let p = graph_to_problem(&apartment::initial_graph(), &Goal::greeted("angel")).unwrap();
        assert_eq!(p.objects.len(), 9);
        assert!(!p.objects.contains_key(apartment::HOUSE));
        assert_eq!(p.init.len(), 5);
        assert!(p.init.contains(&Atom::new("robot_at", &["rb1", "entrance"])));
        assert_eq!(p.init.iter().filter(|a| a.predicate == "person_at").count(), 4);
        assert_eq!(p.goal, vec![Atom::new("greeted", &["angel"])]);
        assert_eq!(parse_problem(&p.to_string(), &greeting_domain()).unwrap(), p);
    }

    #[test]
    fn greeted_edge_maps() {
        let mut g = apartment::initial_graph();
        g.add_edge(Edge::new("rb1", "greeted", "angel")).unwrap();
        let p = graph_to_problem(&g, &Goal::greeted("angel")).unwrap();
        assert!(p.init.contains(&Atom::new("greeted", &["angel"])));
        assert!(plan_for_graph(&g, &Goal::greeted("angel")).unwrap().is_empty());
    }

    #[test]
    fn vocabulary_errors() {
        let mut g = apartment::initial_graph();
        g.add_node(Node::new("d1", "drone")).unwrap();
        assert!(matches!(
            graph_to_problem(&g, &Goal::greeted("angel")),
            Err(ClassicError::Vocabulary(_))
        ));
        let mut g = apartment::initial_graph();
        g.add_edge(Edge::new("angel", "likes", "fran")).unwrap();
        assert!(graph_to_problem(&g, &Goal::greeted("angel")).is_err());
        let g = apartment::initial_graph();
        assert!(graph_to_problem(&g, &Goal::greeted("bob")).is_err());
        assert!(graph_to_problem(&g, &Goal::greeted("bedroom")).is_err());
    }

    #[test]
    fn deterministic() {
        let g = apartment::initial_graph();
        let goal = Goal::new("robot_at", &["rb1", "bedroom"]).unwrap();
        let a = graph_to_problem(&g, &goal).unwrap();
        assert_eq!(a, graph_to_problem(&g.clone(), &goal).unwrap());
        assert_eq!(plan_for_graph(&g, &goal).unwrap().len(), 1);
    }
}
