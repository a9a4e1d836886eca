//! Grounding, STRIPS state transitions and breadth-first plan search.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use super::{ActionSchema, Atom, ClassicError, Domain, Problem};
use crate::plan::{ActionCall, Plan, PlanSource};

pub type GroundState = BTreeSet<Atom>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub precondition: Vec<Atom>,
    pub add: Vec<Atom>,
    pub delete: Vec<Atom>,
}

impl GroundAction {
    pub fn to_call(&self) -> ActionCall {
        ActionCall {
            action: self.name.clone(),
            args: self.args.clone(),
        }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_call().fmt(f)
    }
}

fn instantiate(schema: &ActionSchema, args: &[String]) -> GroundAction {
    let binding: HashMap<&str, &str> = schema
        .params
        .iter()
        .map(|p| p.name.as_str())
        .zip(args.iter().map(String::as_str))
        .collect();
    let subst = |atoms: &[Atom]| -> Vec<Atom> {
        atoms
            .iter()
            .map(|a| Atom {
                predicate: a.predicate.clone(),
                args: a.args.iter().map(|x| binding[x.as_str()].to_string()).collect(),
            })
            .collect()
    };
    GroundAction {
        name: schema.name.clone(),
        args: args.to_vec(),
        precondition: subst(&schema.precondition),
        add: subst(&schema.add),
        delete: subst(&schema.delete),
    }
}

/// Every type-correct instantiation of every action, in a fixed order
/// (domain action order, then lexicographic object tuples).
pub fn ground_actions(domain: &Domain, problem: &Problem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in &domain.actions {
        let candidates: Vec<Vec<&String>> = schema
            .params
            .iter()
            .map(|p| {
                problem
                    .objects
                    .iter()
                    .filter(|(_, t)| domain.is_subtype(t, &p.type_name))
                    .map(|(o, _)| o)
                    .collect()
            })
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; candidates.len()];
        'tuples: loop {
            let args: Vec<String> = idx
                .iter()
                .zip(&candidates)
                .map(|(&i, c)| c[i].clone())
                .collect();
            out.push(instantiate(schema, &args));
            // Odometer-style increment, last position fastest.
            let mut pos = idx.len();
            loop {
                if pos == 0 {
                    break 'tuples;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < candidates[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    out
}

/// Grounds a single call, checking the action name, arity and argument types.
pub fn ground_call(domain: &Domain, problem: &Problem, call: &ActionCall) -> Result<GroundAction, ClassicError> {
    let invalid = |reason: String| ClassicError::InvalidCall {
        call: call.to_string(),
        reason,
    };
    let schema = domain
        .action(&call.action)
        .ok_or_else(|| invalid("unknown action".into()))?;
    if schema.params.len() != call.args.len() {
        return Err(invalid(format!(
            "expected {} argument(s), got {}",
            schema.params.len(),
            call.args.len()
        )));
    }
    for (arg, p) in call.args.iter().zip(&schema.params) {
        let ty = problem
            .objects
            .get(arg)
            .ok_or_else(|| invalid(format!("unknown object `{arg}`")))?;
        if !domain.is_subtype(ty, &p.type_name) {
            return Err(invalid(format!("`{arg}` is a {ty}, expected {}", p.type_name)));
        }
    }
    Ok(instantiate(schema, &call.args))
}

/// STRIPS successor: `(state \ delete) ∪ add`.
pub fn apply(state: &GroundState, action: &GroundAction) -> Result<GroundState, ClassicError> {
    if let Some(missing) = action.precondition.iter().find(|a| !state.contains(*a)) {
        return Err(ClassicError::PreconditionUnsatisfied {
            action: action.to_string(),
            atom: missing.clone(),
        });
    }
    let mut next = state.clone();
    for a in &action.delete {
        next.remove(a);
    }
    next.extend(action.add.iter().cloned());
    Ok(next)
}

fn satisfies(state: &GroundState, goal: &[Atom]) -> bool {
    goal.iter().all(|g| state.contains(g))
}

/// Shortest action sequence from `problem.init` to a goal state.
pub fn search(domain: &Domain, problem: &Problem) -> Result<Vec<GroundAction>, ClassicError> {
    let actions = ground_actions(domain, problem);
    let init = problem.init.clone();
    if satisfies(&init, &problem.goal) {
        return Ok(Vec::new());
    }
    // parent[state] = (previous state, action index)
    let mut parent: HashMap<GroundState, Option<(GroundState, usize)>> = HashMap::new();
    parent.insert(init.clone(), None);
    let mut frontier = VecDeque::from([init]);
    while let Some(state) = frontier.pop_front() {
        for (i, action) in actions.iter().enumerate() {
            let Ok(next) = apply(&state, action) else { continue };
            if parent.contains_key(&next) {
                continue;
            }
            parent.insert(next.clone(), Some((state.clone(), i)));
            if satisfies(&next, &problem.goal) {
                let mut steps = Vec::new();
                let mut cursor = next;
                while let Some(Some((prev, i))) = parent.get(&cursor) {
                    steps.push(actions[*i].clone());
                    cursor = prev.clone();
                }
                steps.reverse();
                return Ok(steps);
            }
            frontier.push_back(next);
        }
    }
    Err(ClassicError::Unsolvable)
}

/// Step-optimal plan for `problem`.
pub fn plan(domain: &Domain, problem: &Problem) -> Result<Plan, ClassicError> {
    let steps = search(domain, problem)?;
    Ok(Plan::new(steps.iter().map(GroundAction::to_call).collect(), PlanSource::Classic))
}

/// Replays `plan` from the initial state, returning the final state if every
/// precondition held and the goal is reached.
pub fn validate_plan(domain: &Domain, problem: &Problem, plan: &Plan) -> Result<GroundState, ClassicError> {
    let mut state = problem.init.clone();
    for call in &plan.steps {
        state = apply(&state, &ground_call(domain, problem, call)?)?;
    }
    if let Some(g) = problem.goal.iter().find(|g| !state.contains(*g)) {
        return Err(ClassicError::GoalNotReached(g.clone()));
    }
    Ok(state)
}
