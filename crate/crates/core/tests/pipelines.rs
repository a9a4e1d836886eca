//! The symbolic pipeline and the LLM layer (driven by the oracle backend)
//! against each other and against brute force, on every greeting instance.

use std::time::Instant;

use nlplan_core::apartment::{self, graph_for_map, person_ids, ROOMS};
use nlplan_core::classic::{apply, graph_to_problem, greeting_domain, ground_actions, ground_call, plan_for_graph, validate_plan};
use nlplan_core::fsm::CancellationToken;
use nlplan_core::kgraph::{shared, KnowledgeGraph, Pattern, Triple};
use nlplan_core::llmplanner::{oracle_backend, run_layer, LayerConfig, Variant};
use nlplan_core::sim::{Executor, Sim, WorldMap};
use nlplan_core::Goal;

fn instances() -> Vec<(String, &'static str)> {
    person_ids()
        .into_iter()
        .flat_map(|p| ROOMS.iter().map(move |r| (p.clone(), *r)))
        .collect()
}

fn home_of(person: &str) -> &'static str {
    apartment::PEOPLE.iter().find(|(p, _)| *p == person).unwrap().1
}

fn facts(g: &KnowledgeGraph) -> Vec<Triple> {
    let mut f = g.matches(&Pattern::any().relation("at"));
    f.extend(g.matches(&Pattern::any().relation("greeted")));
    f.sort();
    f
}

/// Shortest plan length by iterative deepening over every ground action.
fn brute_force_length(graph: &KnowledgeGraph, goal: &Goal) -> usize {
    let domain = greeting_domain();
    let problem = graph_to_problem(graph, goal).unwrap();
    let actions = ground_actions(&domain, &problem);
    fn reach(
        state: &std::collections::BTreeSet<nlplan_core::classic::Atom>,
        goal: &[nlplan_core::classic::Atom],
        actions: &[nlplan_core::classic::GroundAction],
        depth: usize,
    ) -> bool {
        if goal.iter().all(|a| state.contains(a)) {
            return true;
        }
        depth > 0
            && actions
                .iter()
                .filter_map(|a| apply(state, a).ok())
                .any(|next| reach(&next, goal, actions, depth - 1))
    }
    (0..=4)
        .find(|&d| reach(&problem.init, &problem.goal, &actions, d))
        .expect("reachable within four steps")
}

#[test]
fn classical_plans_are_optimal_and_valid() {
    let started = Instant::now();
    let domain = greeting_domain();
    for (person, start) in instances() {
        let g = graph_for_map(&WorldMap::default(), start);
        let goal = Goal::greeted(&person);
        let plan = plan_for_graph(&g, &goal).unwrap();
        let expected = if home_of(&person) == start { 1 } else { 2 };
        assert_eq!(plan.len(), expected, "{person} from {start}");
        assert_eq!(plan.len(), brute_force_length(&g, &goal), "{person} from {start}");

        let problem = graph_to_problem(&g, &goal).unwrap();
        let end = validate_plan(&domain, &problem, &plan).unwrap();
        let mut state = problem.init.clone();
        for step in &plan.steps {
            state = apply(&state, &ground_call(&domain, &problem, step).unwrap()).unwrap();
        }
        assert_eq!(state, end);
        assert!(problem.goal.iter().all(|a| state.contains(a)));
    }
    assert!(started.elapsed().as_secs_f64() < 1.0, "{:?}", started.elapsed());
}

#[test]
fn llm_layer_matches_classical_pipeline() {
    for (person, start) in instances() {
        let goal = Goal::greeted(&person);

        let classic_graph = graph_for_map(&WorldMap::default(), start);
        let plan = plan_for_graph(&classic_graph, &goal).unwrap();
        let mut classic_graph = classic_graph;
        let mut sim = Sim::new(WorldMap::default(), start).unwrap();
        for step in &plan.steps {
            sim.execute(&mut classic_graph, step, &CancellationToken::new()).unwrap();
        }

        let g = shared(graph_for_map(&WorldMap::default(), start));
        let backend = oracle_backend(g.clone());
        let mut llm_sim = Sim::new(WorldMap::default(), start).unwrap();
        let run = run_layer(&g, &goal, &backend, &mut llm_sim, &LayerConfig::new(Variant::Fi), &CancellationToken::new()).unwrap();

        assert!(run.succeeded(), "{person} from {start}");
        assert_eq!(run.plans.len(), 1);
        assert_eq!(run.plans[0].steps, plan.steps, "{person} from {start}");
        assert_eq!(run.executed, plan.steps);
        assert_eq!(facts(&g.read().unwrap()), facts(&classic_graph), "{person} from {start}");
        assert_eq!(llm_sim.metrics(), sim.metrics());
    }
}

#[test]
fn every_variant_succeeds_everywhere() {
    for v in Variant::ALL {
        for (person, start) in instances() {
            let g = shared(graph_for_map(&WorldMap::default(), start));
            let backend = oracle_backend(g.clone());
            let mut sim = Sim::new(WorldMap::default(), start).unwrap();
            let run = run_layer(&g, &Goal::greeted(&person), &backend, &mut sim, &LayerConfig::new(v), &CancellationToken::new()).unwrap();
            assert!(run.succeeded(), "{v}: {person} from {start}");
            assert_eq!(run.check_calls, usize::from(v.goal_check()));
        }
    }
}
