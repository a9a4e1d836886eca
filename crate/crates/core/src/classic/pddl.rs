//! Lexer, s-expression reader and interpreter for the supported PDDL subset.

use std::collections::{BTreeMap, BTreeSet};

use super::{ActionSchema, Atom, ClassicError, Domain, Location, PredicateDecl, Problem, TypedParam};

const SUPPORTED_REQUIREMENTS: [&str; 2] = ["strips", "typing"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Dash,
    Name(String),
    Var(String),
    Keyword(String),
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<(Tok, Location)>, ClassicError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let loc = Location { line, col };
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut line, &mut col);
            continue;
        }
        if c == ';' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                advance(c, &mut line, &mut col);
            }
            continue;
        }
        if c == '(' || c == ')' {
            chars.next();
            advance(c, &mut line, &mut col);
            out.push((if c == '(' { Tok::Open } else { Tok::Close }, loc));
            continue;
        }
        let sigil = if c == '?' || c == ':' {
            chars.next();
            advance(c, &mut line, &mut col);
            Some(c)
        } else {
            None
        };
        let mut word = String::new();
        while let Some(&c) = chars.peek() {
            if !is_name_char(c) {
                break;
            }
            word.push(c.to_ascii_lowercase());
            chars.next();
            advance(c, &mut line, &mut col);
        }
        let tok = match (sigil, word.as_str()) {
            (None, "") => {
                return Err(ClassicError::Lex {
                    loc,
                    msg: format!("unexpected character {c:?}"),
                })
            }
            (Some(s), "") => {
                return Err(ClassicError::Lex {
                    loc,
                    msg: format!("`{s}` must be followed by a name"),
                })
            }
            (None, "-") => Tok::Dash,
            (_, w) if w.starts_with('-') => {
                return Err(ClassicError::Lex {
                    loc,
                    msg: format!("names cannot start with `-`: {w:?}"),
                })
            }
            (None, _) => Tok::Name(word),
            (Some('?'), _) => Tok::Var(format!("?{word}")),
            (Some(_), _) => Tok::Keyword(word),
        };
        out.push((tok, loc));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Sexp {
    List(Vec<Sexp>, Location),
    Leaf(Tok, Location),
}

impl Sexp {
    fn loc(&self) -> Location {
        match self {
            Sexp::List(_, l) | Sexp::Leaf(_, l) => *l,
        }
    }
}

fn read(tokens: Vec<(Tok, Location)>) -> Result<Vec<Sexp>, ClassicError> {
    let mut stack: Vec<(Vec<Sexp>, Location)> = vec![(Vec::new(), Location::default())];
    for (tok, loc) in tokens {
        match tok {
            Tok::Open => stack.push((Vec::new(), loc)),
            Tok::Close => {
                if stack.len() == 1 {
                    return Err(ClassicError::Parse {
                        loc,
                        msg: "unmatched `)`".into(),
                    });
                }
                let (items, open) = stack.pop().expect("checked depth");
                stack.last_mut().expect("root frame").0.push(Sexp::List(items, open));
            }
            other => stack.last_mut().expect("root frame").0.push(Sexp::Leaf(other, loc)),
        }
    }
    if stack.len() > 1 {
        let (_, open) = stack.pop().expect("checked depth");
        return Err(ClassicError::Parse {
            loc: open,
            msg: "unclosed `(`".into(),
        });
    }
    Ok(stack.pop().expect("root frame").0)
}

fn parse_err(loc: Location, msg: impl Into<String>) -> ClassicError {
    ClassicError::Parse { loc, msg: msg.into() }
}

fn semantic(loc: Location, msg: impl Into<String>) -> ClassicError {
    ClassicError::Semantic { loc, msg: msg.into() }
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], ClassicError> {
    match s {
        Sexp::List(items, _) => Ok(items),
        Sexp::Leaf(_, loc) => Err(parse_err(*loc, format!("expected {what}"))),
    }
}

fn name(s: &Sexp, what: &str) -> Result<String, ClassicError> {
    match s {
        Sexp::Leaf(Tok::Name(n), _) => Ok(n.clone()),
        other => Err(parse_err(other.loc(), format!("expected {what}"))),
    }
}

fn keyword(s: &Sexp) -> Option<&str> {
    match s {
        Sexp::Leaf(Tok::Keyword(k), _) => Some(k),
        _ => None,
    }
}

/// Reads the single top-level `(define (<kind> <name>) ...)` form.
fn define<'a>(forms: &'a [Sexp], kind: &str, end: Location) -> Result<(String, &'a [Sexp]), ClassicError> {
    let form = match forms {
        [one] => one,
        [] => return Err(parse_err(end, "empty input")),
        [_, second, ..] => return Err(parse_err(second.loc(), "expected a single top-level form")),
    };
    let items = list(form, "`(define ...)`")?;
    match items.first() {
        Some(Sexp::Leaf(Tok::Name(n), _)) if n == "define" => {}
        _ => return Err(parse_err(form.loc(), "expected `define`")),
    }
    let header = items
        .get(1)
        .ok_or_else(|| parse_err(form.loc(), format!("missing `({kind} <name>)`")))?;
    let h = list(header, &format!("`({kind} <name>)`"))?;
    match h {
        [Sexp::Leaf(Tok::Name(w), _), n] if w == kind => Ok((name(n, &format!("{kind} name"))?, &items[2..])),
        _ => Err(parse_err(header.loc(), format!("expected `({kind} <name>)`"))),
    }
}

/// `a b - t c` style list. Returns `(item, type, location)`; untyped items get `object`.
fn typed_list(items: &[Sexp], variables: bool) -> Result<Vec<(String, String, Location)>, ClassicError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Location)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            Sexp::Leaf(Tok::Dash, loc) => {
                if pending.is_empty() {
                    return Err(parse_err(*loc, "`-` without preceding names"));
                }
                let ty = items
                    .get(i + 1)
                    .ok_or_else(|| parse_err(*loc, "`-` must be followed by a type"))
                    .and_then(|s| name(s, "a type name after `-`"))?;
                out.extend(pending.drain(..).map(|(n, l)| (n, ty.clone(), l)));
                i += 2;
                continue;
            }
            Sexp::Leaf(Tok::Var(v), loc) if variables => pending.push((v.clone(), *loc)),
            Sexp::Leaf(Tok::Name(n), loc) if !variables => pending.push((n.clone(), *loc)),
            other => {
                let want = if variables { "a `?variable`" } else { "a name" };
                return Err(parse_err(other.loc(), format!("expected {want}")));
            }
        }
        i += 1;
    }
    out.extend(pending.into_iter().map(|(n, l)| (n, "object".to_string(), l)));
    Ok(out)
}

/// A literal: `(p args)` or `(not (p args))`, with locations.
struct Literal {
    atom: Atom,
    negated: bool,
    loc: Location,
}

fn literal(s: &Sexp) -> Result<Literal, ClassicError> {
    let items = list(s, "a literal")?;
    let head = items.first().ok_or_else(|| parse_err(s.loc(), "empty literal"))?;
    if matches!(head, Sexp::Leaf(Tok::Name(n), _) if n == "not") {
        let inner = match &items[1..] {
            [one] => one,
            _ => return Err(parse_err(s.loc(), "`not` takes exactly one atom")),
        };
        let mut lit = literal(inner)?;
        if lit.negated {
            return Err(semantic(s.loc(), "nested negation is not supported"));
        }
        lit.negated = true;
        lit.loc = s.loc();
        return Ok(lit);
    }
    let predicate = name(head, "a predicate name")?;
    if ["and", "or", "imply", "exists", "forall", "when"].contains(&predicate.as_str()) {
        return Err(semantic(head.loc(), format!("`{predicate}` is not supported here")));
    }
    let args = items[1..]
        .iter()
        .map(|a| match a {
            Sexp::Leaf(Tok::Name(n), _) | Sexp::Leaf(Tok::Var(n), _) => Ok(n.clone()),
            other => Err(parse_err(other.loc(), "expected an argument")),
        })
        .collect::<Result<_, _>>()?;
    Ok(Literal {
        atom: Atom { predicate, args },
        negated: false,
        loc: s.loc(),
    })
}

/// `(and l*)`, `()` or a single literal.
fn conjunction(s: &Sexp) -> Result<Vec<Literal>, ClassicError> {
    let items = list(s, "a condition")?;
    match items.first() {
        None => Ok(Vec::new()),
        Some(Sexp::Leaf(Tok::Name(n), _)) if n == "and" => items[1..].iter().map(literal).collect(),
        Some(_) => Ok(vec![literal(s)?]),
    }
}

fn check_atom(
    domain: &Domain,
    atom: &Atom,
    loc: Location,
    type_of: &dyn Fn(&str) -> Option<String>,
    what: &str,
) -> Result<(), ClassicError> {
    let decl = domain
        .predicate(&atom.predicate)
        .ok_or_else(|| semantic(loc, format!("undeclared predicate `{}`", atom.predicate)))?;
    if decl.params.len() != atom.args.len() {
        return Err(semantic(
            loc,
            format!(
                "`{}` takes {} argument(s), got {}",
                atom.predicate,
                decl.params.len(),
                atom.args.len()
            ),
        ));
    }
    for (arg, param) in atom.args.iter().zip(&decl.params) {
        let ty = type_of(arg).ok_or_else(|| semantic(loc, format!("undeclared {what} `{arg}`")))?;
        if !domain.is_subtype(&ty, &param.type_name) {
            return Err(semantic(
                loc,
                format!(
                    "`{arg}` has type `{ty}` but `{}` expects `{}`",
                    atom.predicate, param.type_name
                ),
            ));
        }
    }
    Ok(())
}

fn params(items: &[Sexp], domain: &Domain) -> Result<Vec<TypedParam>, ClassicError> {
    let mut seen = BTreeSet::new();
    typed_list(items, true)?
        .into_iter()
        .map(|(name, type_name, loc)| {
            if !domain.has_type(&type_name) {
                return Err(semantic(loc, format!("undeclared type `{type_name}`")));
            }
            if !seen.insert(name.clone()) {
                return Err(semantic(loc, format!("duplicate parameter `{name}`")));
            }
            Ok(TypedParam { name, type_name })
        })
        .collect()
}

fn parse_action(items: &[Sexp], loc: Location, domain: &Domain) -> Result<ActionSchema, ClassicError> {
    let action_name = name(
        items.first().ok_or_else(|| parse_err(loc, "missing action name"))?,
        "an action name",
    )?;
    let mut parameters = Vec::new();
    let mut precondition = Vec::new();
    let mut effect = Vec::new();
    let mut i = 1;
    while i < items.len() {
        let key = keyword(&items[i]).ok_or_else(|| parse_err(items[i].loc(), "expected `:parameters`, `:precondition` or `:effect`"))?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| parse_err(items[i].loc(), format!("`:{key}` needs a value")))?;
        match key {
            "parameters" => parameters = params(list(value, "a parameter list")?, domain)?,
            "precondition" => precondition = conjunction(value)?,
            "effect" => effect = conjunction(value)?,
            other => return Err(semantic(items[i].loc(), format!("unsupported action field `:{other}`"))),
        }
        i += 2;
    }
    let types: BTreeMap<&str, &str> = parameters
        .iter()
        .map(|p| (p.name.as_str(), p.type_name.as_str()))
        .collect();
    let type_of = |arg: &str| -> Option<String> { types.get(arg).map(|t| t.to_string()) };
    for lit in precondition.iter().chain(&effect) {
        if let Some(constant) = lit.atom.args.iter().find(|a| !a.starts_with('?')) {
            return Err(semantic(lit.loc, format!("constant `{constant}` in action schema is not supported")));
        }
        check_atom(domain, &lit.atom, lit.loc, &type_of, "parameter")?;
    }
    if let Some(neg) = precondition.iter().find(|l| l.negated) {
        return Err(semantic(neg.loc, "negative preconditions are not supported"));
    }
    let (delete, add): (Vec<Literal>, Vec<Literal>) = effect.into_iter().partition(|l| l.negated);
    Ok(ActionSchema {
        name: action_name,
        params: parameters,
        precondition: precondition.into_iter().map(|l| l.atom).collect(),
        add: add.into_iter().map(|l| l.atom).collect(),
        delete: delete.into_iter().map(|l| l.atom).collect(),
    })
}

fn end_of(text: &str) -> Location {
    Location {
        line: text.lines().count().max(1),
        col: text.lines().last().map_or(1, |l| l.chars().count() + 1),
    }
}

pub fn parse_domain(text: &str) -> Result<Domain, ClassicError> {
    let forms = read(lex(text)?)?;
    let (domain_name, sections) = define(&forms, "domain", end_of(text))?;
    let mut domain = Domain {
        name: domain_name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for section in sections {
        let items = list(section, "a domain section")?;
        let key = items
            .first()
            .and_then(keyword)
            .ok_or_else(|| parse_err(section.loc(), "expected a `(:section ...)`"))?;
        let body = &items[1..];
        match key {
            "requirements" => {
                for r in body {
                    let req = keyword(r).ok_or_else(|| parse_err(r.loc(), "expected a `:requirement`"))?;
                    if !SUPPORTED_REQUIREMENTS.contains(&req) {
                        return Err(semantic(r.loc(), format!("unsupported requirement `:{req}`")));
                    }
                    domain.requirements.push(req.to_string());
                }
            }
            "types" => {
                for (t, parent, loc) in typed_list(body, false)? {
                    if domain.has_type(&t) {
                        return Err(semantic(loc, format!("duplicate type `{t}`")));
                    }
                    domain.types.push((t, parent));
                }
                for (t, parent) in &domain.types {
                    if !domain.has_type(parent) {
                        return Err(semantic(section.loc(), format!("type `{t}` has undeclared parent `{parent}`")));
                    }
                }
            }
            "predicates" => {
                for p in body {
                    let pitems = list(p, "a predicate declaration")?;
                    let pname = name(
                        pitems.first().ok_or_else(|| parse_err(p.loc(), "empty predicate declaration"))?,
                        "a predicate name",
                    )?;
                    if domain.predicate(&pname).is_some() {
                        return Err(semantic(p.loc(), format!("duplicate predicate `{pname}`")));
                    }
                    let params = params(&pitems[1..], &domain)?;
                    domain.predicates.push(PredicateDecl { name: pname, params });
                }
            }
            "action" => {
                let action = parse_action(body, section.loc(), &domain)?;
                if domain.action(&action.name).is_some() {
                    return Err(semantic(section.loc(), format!("duplicate action `{}`", action.name)));
                }
                domain.actions.push(action);
            }
            other => return Err(semantic(section.loc(), format!("unsupported section `:{other}`"))),
        }
    }
    Ok(domain)
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, ClassicError> {
    let forms = read(lex(text)?)?;
    let (problem_name, sections) = define(&forms, "problem", end_of(text))?;
    let mut problem = Problem {
        name: problem_name,
        domain: String::new(),
        objects: BTreeMap::new(),
        init: BTreeSet::new(),
        goal: Vec::new(),
    };
    let mut goal_seen = false;
    let mut deferred: Vec<(Literal, bool)> = Vec::new();
    for section in sections {
        let items = list(section, "a problem section")?;
        let key = items
            .first()
            .and_then(keyword)
            .ok_or_else(|| parse_err(section.loc(), "expected a `(:section ...)`"))?;
        let body = &items[1..];
        match key {
            "domain" => {
                let dn = match body {
                    [n] => name(n, "a domain name")?,
                    _ => return Err(parse_err(section.loc(), "expected `(:domain <name>)`")),
                };
                if dn != domain.name {
                    return Err(semantic(section.loc(), format!("problem is for domain `{dn}`, not `{}`", domain.name)));
                }
                problem.domain = dn;
            }
            "requirements" => {}
            "objects" => {
                for (o, t, loc) in typed_list(body, false)? {
                    if !domain.has_type(&t) {
                        return Err(semantic(loc, format!("undeclared type `{t}`")));
                    }
                    if problem.objects.insert(o.clone(), t).is_some() {
                        return Err(semantic(loc, format!("duplicate object `{o}`")));
                    }
                }
            }
            "init" => {
                for a in body {
                    let lit = literal(a)?;
                    if lit.negated {
                        return Err(semantic(lit.loc, "negative initial facts are not supported"));
                    }
                    deferred.push((lit, false));
                }
            }
            "goal" => {
                let body = match body {
                    [one] => one,
                    _ => return Err(parse_err(section.loc(), "expected `(:goal <condition>)`")),
                };
                for lit in conjunction(body)? {
                    if lit.negated {
                        return Err(semantic(lit.loc, "negative goals are not supported"));
                    }
                    deferred.push((lit, true));
                }
                goal_seen = true;
            }
            other => return Err(semantic(section.loc(), format!("unsupported section `:{other}`"))),
        }
    }
    if problem.domain.is_empty() {
        return Err(semantic(forms[0].loc(), "missing `(:domain ...)`"));
    }
    if !goal_seen {
        return Err(semantic(forms[0].loc(), "missing `(:goal ...)`"));
    }
    let type_of = |o: &str| problem.objects.get(o).cloned();
    for (lit, _) in &deferred {
        check_atom(domain, &lit.atom, lit.loc, &type_of, "object")?;
    }
    for (lit, is_goal) in deferred {
        if is_goal {
            problem.goal.push(lit.atom);
        } else {
            problem.init.insert(lit.atom);
        }
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{greeting_domain, GREETING_DOMAIN};
    use proptest::prelude::*;

    #[test]
    fn shipped_domain_shape() {
        let d = parse_domain(GREETING_DOMAIN).unwrap();
        assert_eq!(d.name, "greeting");
        assert_eq!(d.actions.len(), 2);
        let preds: Vec<&str> = d.predicates.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(preds, ["robot_at", "person_at", "greeted"]);
        let nav = d.action("navigate").unwrap();
        assert_eq!(nav.params.len(), 3);
        assert_eq!(nav.add, vec![Atom::new("robot_at", &["?r", "?to"])]);
        assert_eq!(nav.delete, vec![Atom::new("robot_at", &["?r", "?from"])]);
    }

    #[test]
    fn undeclared_predicate_has_location() {
        let text = "(define (domain d)\n  (:predicates (p ?x))\n  (:action foo :parameters (?x) :precondition (bar ?x)))";
        let err = parse_domain(text).unwrap_err();
        assert!(matches!(err, ClassicError::Semantic { .. }), "{err}");
        assert_eq!(err.location(), Some(Location { line: 3, col: 47 }));
        assert!(err.to_string().contains("bar"));
    }

    #[test]
    fn lex_and_parse_errors() {
        let e = parse_domain("(define (domain d) {)").unwrap_err();
        assert!(matches!(e, ClassicError::Lex { loc: Location { line: 1, col: 20 }, .. }), "{e}");
        let e = parse_domain("(define (domain d)\n  (:predicates (p)").unwrap_err();
        assert!(matches!(e, ClassicError::Parse { loc: Location { line: 2, col: 3 }, .. }), "{e}");
        let e = parse_domain("(define (domain d)))").unwrap_err();
        assert!(matches!(e, ClassicError::Parse { loc: Location { line: 1, col: 20 }, .. }), "{e}");
        let e = parse_domain("(define (domain d) (:requirements :durative-actions))").unwrap_err();
        assert!(matches!(e, ClassicError::Semantic { .. }), "{e}");
    }

    #[test]
    fn semantic_checks() {
        let d = greeting_domain();
        let arity = "(define (problem p) (:domain greeting) (:objects a - robot) (:init (robot_at a)) (:goal (and)))";
        assert!(parse_problem(arity, &d).unwrap_err().to_string().contains("takes 2"));
        let ty = "(define (problem p) (:domain greeting) (:objects a - robot w - room) (:init) (:goal (greeted a)))";
        assert!(parse_problem(ty, &d).unwrap_err().to_string().contains("expects `person`"));
        let undeclared = "(define (problem p) (:domain greeting) (:objects a - robot) (:init (robot_at a nowhere)) (:goal (and)))";
        assert!(parse_problem(undeclared, &d).unwrap_err().to_string().contains("nowhere"));
        let wrong_domain = "(define (problem p) (:domain other) (:goal (and)))";
        assert!(parse_problem(wrong_domain, &d).is_err());
        let neg_pre = "(define (domain d) (:predicates (p)) (:action a :parameters () :precondition (not (p)) :effect (p)))";
        assert!(parse_domain(neg_pre).unwrap_err().to_string().contains("negative"));
    }

    #[test]
    fn problem_parses_case_insensitively() {
        let d = greeting_domain();
        let text = "; comment\n(DEFINE (PROBLEM p) (:DOMAIN greeting)\n (:objects rb1 - robot Angel - person e b - room)\n (:init (robot_at rb1 e) (person_at angel b))\n (:goal (greeted angel)))";
        let p = parse_problem(text, &d).unwrap();
        assert_eq!(p.objects.len(), 4);
        assert_eq!(p.objects["e"], "room");
        assert!(p.init.contains(&Atom::new("person_at", &["angel", "b"])));
        assert_eq!(p.goal, vec![Atom::new("greeted", &["angel"])]);
    }

    #[test]
    fn subtypes() {
        let text = "(define (domain d) (:requirements :typing) (:types place - object room hall - place) (:predicates (at ?x - place)) (:action go :parameters (?r - room) :precondition (and) :effect (at ?r)))";
        let d = parse_domain(text).unwrap();
        assert!(d.is_subtype("room", "place"));
        assert!(d.is_subtype("hall", "object"));
        assert!(!d.is_subtype("place", "room"));
        assert_eq!(parse_domain(&d.to_string()).unwrap(), d);
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_]{0,5}".prop_filter("reserved", |s| !["and", "not", "or", "define", "object", "imply", "exists", "forall", "when"].contains(&s.as_str()))
    }

    prop_compose! {
        fn arb_domain()(
            types in proptest::collection::btree_set(ident(), 1..4),
            pred_names in proptest::collection::btree_set(ident(), 1..4),
            arities in proptest::collection::vec(0usize..3, 4),
            action_names in proptest::collection::btree_set(ident(), 0..3),
            picks in proptest::collection::vec(any::<u8>(), 64),
        ) -> Domain {
            let types: Vec<String> = types.into_iter().map(|t| format!("t{t}")).collect();
            let predicates: Vec<PredicateDecl> = pred_names.into_iter().enumerate().map(|(i, n)| PredicateDecl {
                name: format!("p{n}"),
                params: (0..arities[i]).map(|j| TypedParam {
                    name: format!("?a{j}"),
                    type_name: types[picks[i * 3 + j] as usize % types.len()].clone(),
                }).collect(),
            }).collect();
            let mut k = 20;
            let mut next = || { k += 1; picks[k % picks.len()] as usize };
            let actions = action_names.into_iter().map(|n| {
                let params: Vec<TypedParam> = types.iter().enumerate()
                    .map(|(j, t)| TypedParam { name: format!("?v{j}"), type_name: t.clone() })
                    .collect();
                let (a, b, c) = (next() % 3, next() % 3, next() % 3);
                let mut lits = |count: usize| -> Vec<Atom> {
                    (0..count).map(|_| {
                        let p = &predicates[next() % predicates.len()];
                        Atom {
                            predicate: p.name.clone(),
                            args: p.params.iter().map(|pp| {
                                let j = types.iter().position(|t| *t == pp.type_name).unwrap();
                                format!("?v{j}")
                            }).collect(),
                        }
                    }).collect()
                };
                ActionSchema { name: format!("act{n}"), precondition: lits(a), add: lits(b), delete: lits(c), params }
            }).collect();
            Domain {
                name: "gen".into(),
                requirements: vec!["strips".into(), "typing".into()],
                types: types.into_iter().map(|t| (t, "object".to_string())).collect(),
                predicates,
                actions,
            }
        }
    }

    proptest! {
        #[test]
        fn domain_round_trip(d in arb_domain()) {
            let printed = d.to_string();
            let reparsed = parse_domain(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
            prop_assert_eq!(&reparsed, &d);
            prop_assert_eq!(parse_domain(&reparsed.to_string()).unwrap(), d);
        }

        #[test]
        fn problem_round_trip(
            robots in proptest::collection::btree_set(ident(), 1..3),
            people in proptest::collection::btree_set(ident(), 1..4),
            rooms in proptest::collection::btree_set(ident(), 1..4),
            picks in proptest::collection::vec(any::<u8>(), 8),
        ) {
            let d = greeting_domain();
            let robots: Vec<String> = robots.into_iter().map(|r| format!("r_{r}")).collect();
            let people: Vec<String> = people.into_iter().map(|p| format!("p_{p}")).collect();
            let rooms: Vec<String> = rooms.into_iter().map(|w| format!("w_{w}")).collect();
            let mut objects = BTreeMap::new();
            for r in &robots { objects.insert(r.clone(), "robot".to_string()); }
            for p in &people { objects.insert(p.clone(), "person".to_string()); }
            for w in &rooms { objects.insert(w.clone(), "room".to_string()); }
            let mut init = BTreeSet::new();
            init.insert(Atom::new("robot_at", &[&robots[0], &rooms[picks[0] as usize % rooms.len()]]));
            for (i, p) in people.iter().enumerate() {
                init.insert(Atom::new("person_at", &[p, &rooms[picks[1 + i] as usize % rooms.len()]]));
            }
            let goal = vec![Atom::new("greeted", &[&people[picks[7] as usize % people.len()]])];
            let p = Problem { name: "gen".into(), domain: "greeting".into(), objects, init, goal };
            let reparsed = parse_problem(&p.to_string(), &d).unwrap();
            prop_assert_eq!(reparsed, p);
        }
    }
}
