//! GBNF-style BNF grammars and an Earley recognizer over them.
//!
//! The accepted notation follows llama.cpp's `.gbnf` files: `name ::= body`
//! rules, double-quoted literals, `[...]` character classes (with `^`
//! negation and ranges), `.` for any character, grouping, alternation and the
//! `*`, `+`, `?`, `{m}`, `{m,}`, `{m,n}` repetition operators. `#` starts a
//! comment. A rule body runs until the next `name ::=` or the end of input.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

const JSON_GBNF: &str = include_str!("../../assets/json.gbnf");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: rule `{name}` is referenced but never defined")]
    Undefined { name: String, line: usize, col: usize },
    #[error("rule `{0}` is defined twice")]
    Redefined(String),
    #[error("root rule `{0}` is not defined")]
    MissingRoot(String),
    #[error("root rule `{0}` derives no finite string")]
    EmptyLanguage(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CharClass {
    ranges: Vec<(char, char)>,
    negated: bool,
}

impl CharClass {
    fn single(c: char) -> Self {
        CharClass {
            ranges: vec![(c, c)],
            negated: false,
        }
    }

    fn any() -> Self {
        CharClass {
            ranges: Vec::new(),
            negated: true,
        }
    }

    fn matches(&self, c: char) -> bool {
        self.ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi) != self.negated
    }

    fn is_empty_set(&self) -> bool {
        if !self.negated {
            return self.ranges.iter().all(|&(lo, hi)| lo > hi);
        }
        // Negated: empty only when the ranges cover every scalar value.
        let mut spans: Vec<(u32, u32)> = self
            .ranges
            .iter()
            .filter(|(lo, hi)| lo <= hi)
            .map(|&(lo, hi)| (lo as u32, hi as u32))
            .collect();
        spans.sort();
        let mut next = 0u32;
        for (lo, hi) in spans {
            if lo > next {
                // The surrogate gap is not made of chars.
                if !(next == 0xD800 && lo <= 0xE000) {
                    return false;
                }
            }
            next = next.max(hi + 1);
        }
        next > char::MAX as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    DefinedAs,
    Literal(Vec<char>),
    Class(CharClass),
    Dot,
    LParen,
    RParen,
    Pipe,
    Star,
    Plus,
    Question,
    Braces(usize, Option<usize>),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> GrammarError {
        GrammarError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn hex(&mut self, digits: usize) -> Result<char, GrammarError> {
        let mut value = 0u32;
        for _ in 0..digits {
            let c = self.bump().ok_or_else(|| self.err("truncated hex escape"))?;
            let d = c.to_digit(16).ok_or_else(|| self.err(format!("bad hex digit {c:?}")))?;
            value = value * 16 + d;
        }
        char::from_u32(value).ok_or_else(|| self.err(format!("escape {value:#x} is not a char")))
    }

    fn escaped_char(&mut self) -> Result<char, GrammarError> {
        let c = self.bump().ok_or_else(|| self.err("unterminated escape"))?;
        Ok(match c {
            'x' => self.hex(2)?,
            'u' => self.hex(4)?,
            'U' => self.hex(8)?,
            'n' => '\n',
            'r' => '\r',
            't' => '\t',
            '\\' | '"' | '[' | ']' | '-' | '^' | '/' => c,
            other => return Err(self.err(format!("unknown escape \\{other}"))),
        })
    }

    fn class_char(&mut self) -> Result<char, GrammarError> {
        match self.bump() {
            Some('\\') => self.escaped_char(),
            Some(c) => Ok(c),
            None => Err(self.err("unterminated character class")),
        }
    }

    fn number(&mut self) -> Option<usize> {
        let mut digits = String::new();
        while let Some(c) = self.chars.peek().copied().filter(char::is_ascii_digit) {
            digits.push(c);
            self.bump();
        }
        digits.parse().ok()
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, GrammarError> {
        let mut out = Vec::new();
        loop {
            self.skip_blank();
            let (line, col) = (self.line, self.col);
            let Some(c) = self.bump() else { break };
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '|' => Tok::Pipe,
                '*' => Tok::Star,
                '+' => Tok::Plus,
                '?' => Tok::Question,
                '.' => Tok::Dot,
                ':' => {
                    if self.bump() == Some(':') && self.bump() == Some('=') {
                        Tok::DefinedAs
                    } else {
                        return Err(self.err("expected `::=`"));
                    }
                }
                '"' => {
                    let mut lit = Vec::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\\') => lit.push(self.escaped_char()?),
                            Some(c) => lit.push(c),
                            None => return Err(self.err("unterminated literal")),
                        }
                    }
                    Tok::Literal(lit)
                }
                '[' => {
                    let negated = self.chars.peek() == Some(&'^');
                    if negated {
                        self.bump();
                    }
                    let mut ranges = Vec::new();
                    loop {
                        if self.chars.peek() == Some(&']') {
                            self.bump();
                            break;
                        }
                        let lo = self.class_char()?;
                        let mut hi = lo;
                        if self.chars.peek() == Some(&'-') {
                            self.bump();
                            if self.chars.peek() == Some(&']') {
                                ranges.push((lo, lo));
                                ranges.push(('-', '-'));
                                continue;
                            }
                            hi = self.class_char()?;
                        }
                        ranges.push((lo, hi));
                    }
                    Tok::Class(CharClass { ranges, negated })
                }
                '{' => {
                    self.skip_blank();
                    let min = self.number().ok_or_else(|| self.err("expected repetition count"))?;
                    self.skip_blank();
                    let max = match self.bump() {
                        Some('}') => Some(min),
                        Some(',') => {
                            self.skip_blank();
                            let max = self.number();
                            self.skip_blank();
                            if self.bump() != Some('}') {
                                return Err(self.err("expected `}`"));
                            }
                            max
                        }
                        _ => return Err(self.err("malformed repetition")),
                    };
                    if max.is_some_and(|m| m < min) {
                        return Err(self.err("repetition upper bound below lower bound"));
                    }
                    Tok::Braces(min, max)
                }
                c if c.is_ascii_alphanumeric() || c == '-' || c == '_' => {
                    let mut name = c.to_string();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(name)
                }
                other => return Err(self.err(format!("unexpected character {other:?}"))),
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum Expr {
    Alt(Vec<Vec<Expr>>),
    Literal(Vec<char>),
    Class(CharClass),
    Ref { name: String, line: usize, col: usize },
    Repeat(Box<Expr>, usize, Option<usize>),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn at_rule_start(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.toks.get(self.pos + 1).map(|s| &s.tok), Some(Tok::DefinedAs))
    }

    fn err_here(&self, msg: &str) -> GrammarError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .or(self.toks.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1));
        GrammarError::Syntax {
            line,
            col,
            msg: msg.to_string(),
        }
    }

    fn rules(&mut self) -> Result<Vec<(String, Expr)>, GrammarError> {
        let mut rules = Vec::new();
        while self.pos < self.toks.len() {
            if !self.at_rule_start() {
                return Err(self.err_here("expected `name ::=`"));
            }
            let Some(Tok::Ident(name)) = self.peek().cloned() else { unreachable!() };
            self.pos += 2;
            let body = self.alternates(false)?;
            rules.push((name, body));
        }
        Ok(rules)
    }

    fn alternates(&mut self, nested: bool) -> Result<Expr, GrammarError> {
        let mut alts = vec![self.sequence()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            alts.push(self.sequence()?);
        }
        if nested {
            if self.peek() != Some(&Tok::RParen) {
                return Err(self.err_here("expected `)`"));
            }
            self.pos += 1;
        } else if self.peek() == Some(&Tok::RParen) {
            return Err(self.err_here("unbalanced `)`"));
        }
        Ok(Expr::Alt(alts))
    }

    fn sequence(&mut self) -> Result<Vec<Expr>, GrammarError> {
        let mut seq = Vec::new();
        loop {
            if self.at_rule_start() {
                break;
            }
            let Some(spanned) = self.toks.get(self.pos).cloned() else { break };
            let mut elem = match spanned.tok {
                Tok::Pipe | Tok::RParen => break,
                Tok::Literal(chars) => Expr::Literal(chars),
                Tok::Class(c) => Expr::Class(c),
                Tok::Dot => Expr::Class(CharClass::any()),
                Tok::Ident(name) => Expr::Ref {
                    name,
                    line: spanned.line,
                    col: spanned.col,
                },
                Tok::LParen => {
                    self.pos += 1;
                    let inner = self.alternates(true)?;
                    self.pos -= 1;
                    inner
                }
                _ => return Err(self.err_here("expected a grammar element")),
            };
            self.pos += 1;
            loop {
                elem = match self.peek() {
                    Some(Tok::Star) => Expr::Repeat(Box::new(elem), 0, None),
                    Some(Tok::Plus) => Expr::Repeat(Box::new(elem), 1, None),
                    Some(Tok::Question) => Expr::Repeat(Box::new(elem), 0, Some(1)),
                    Some(Tok::Braces(min, max)) => Expr::Repeat(Box::new(elem), *min, *max),
                    _ => break,
                };
                self.pos += 1;
            }
            seq.push(elem);
        }
        Ok(seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym {
    Term(u32),
    NonTerm(u32),
}

#[derive(Debug, Clone)]
struct Production {
    lhs: u32,
    rhs: Vec<Sym>,
}

/// A validated context-free grammar ready for recognition.
#[derive(Debug, Clone)]
pub struct GrammarSpec {
    source: String,
    root: String,
    names: Vec<String>,
    classes: Vec<CharClass>,
    prods: Vec<Production>,
    by_lhs: Vec<Vec<u32>>,
    nullable: Vec<bool>,
    start_prod: u32,
}

impl PartialEq for GrammarSpec {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.root == other.root
    }
}

impl fmt::Display for GrammarSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Lowering {
    names: Vec<String>,
    index: HashMap<String, u32>,
    classes: Vec<CharClass>,
    prods: Vec<Production>,
}

impl Lowering {
    fn fresh(&mut self, hint: &str) -> u32 {
        let id = self.names.len() as u32;
        self.names.push(format!("{hint}_{id}"));
        id
    }

    fn class(&mut self, c: CharClass) -> u32 {
        if let Some(i) = self.classes.iter().position(|x| *x == c) {
            return i as u32;
        }
        self.classes.push(c);
        (self.classes.len() - 1) as u32
    }

    fn push(&mut self, lhs: u32, rhs: Vec<Sym>) {
        self.prods.push(Production { lhs, rhs });
    }

    fn alternatives(&mut self, lhs: u32, expr: &Expr) -> Result<(), GrammarError> {
        match expr {
            Expr::Alt(alts) => {
                for seq in alts {
                    let rhs = self.sequence(seq)?;
                    self.push(lhs, rhs);
                }
            }
            other => {
                let rhs = self.element(other)?;
                self.push(lhs, rhs);
            }
        }
        Ok(())
    }

    fn sequence(&mut self, seq: &[Expr]) -> Result<Vec<Sym>, GrammarError> {
        let mut out = Vec::new();
        for e in seq {
            out.extend(self.element(e)?);
        }
        Ok(out)
    }

    fn element(&mut self, e: &Expr) -> Result<Vec<Sym>, GrammarError> {
        Ok(match e {
            Expr::Literal(chars) => chars
                .iter()
                .map(|&c| Sym::Term(self.class(CharClass::single(c))))
                .collect(),
            Expr::Class(c) => vec![Sym::Term(self.class(c.clone()))],
            Expr::Ref { name, line, col } => match self.index.get(name) {
                Some(&id) => vec![Sym::NonTerm(id)],
                None => {
                    return Err(GrammarError::Undefined {
                        name: name.clone(),
                        line: *line,
                        col: *col,
                    })
                }
            },
            Expr::Alt(alts) if alts.len() == 1 => self.sequence(&alts[0])?,
            Expr::Alt(_) => {
                let id = self.fresh("group");
                self.alternatives(id, e)?;
                vec![Sym::NonTerm(id)]
            }
            Expr::Repeat(inner, min, max) => {
                let item = self.element(inner)?;
                let mut out = Vec::new();
                for _ in 0..*min {
                    out.extend(item.iter().copied());
                }
                match max {
                    None => {
                        // star ::= | star item
                        let star = self.fresh("star");
                        self.push(star, Vec::new());
                        let mut rec = vec![Sym::NonTerm(star)];
                        rec.extend(item.iter().copied());
                        self.push(star, rec);
                        out.push(Sym::NonTerm(star));
                    }
                    Some(max) if *max > *min => {
                        // opt_k ::= | item opt_{k-1}
                        let mut tail: Option<u32> = None;
                        for _ in *min..*max {
                            let opt = self.fresh("opt");
                            self.push(opt, Vec::new());
                            let mut rhs = item.clone();
                            if let Some(t) = tail {
                                rhs.push(Sym::NonTerm(t));
                            }
                            self.push(opt, rhs);
                            tail = Some(opt);
                        }
                        out.push(Sym::NonTerm(tail.expect("max > min")));
                    }
                    Some(_) => {}
                }
                out
            }
        })
    }
}

impl GrammarSpec {
    /// Parses a grammar whose start rule is `root`.
    pub fn parse(source: &str) -> Result<Self, GrammarError> {
        Self::parse_with_root(source, "root")
    }

    pub fn parse_with_root(source: &str, root: &str) -> Result<Self, GrammarError> {
        let toks = Lexer::new(source).tokens()?;
        let rules = Parser { toks, pos: 0 }.rules()?;

        let mut low = Lowering {
            names: Vec::new(),
            index: HashMap::new(),
            classes: Vec::new(),
            prods: Vec::new(),
        };
        for (name, _) in &rules {
            if low.index.contains_key(name) {
                return Err(GrammarError::Redefined(name.clone()));
            }
            low.index.insert(name.clone(), low.names.len() as u32);
            low.names.push(name.clone());
        }
        let root_id = *low
            .index
            .get(root)
            .ok_or_else(|| GrammarError::MissingRoot(root.to_string()))?;
        for (i, (_, body)) in rules.iter().enumerate() {
            low.alternatives(i as u32, body)?;
        }
        let start = low.fresh("start");
        low.push(start, vec![Sym::NonTerm(root_id)]);
        let start_prod = (low.prods.len() - 1) as u32;

        let n = low.names.len();
        let mut by_lhs = vec![Vec::new(); n];
        for (i, p) in low.prods.iter().enumerate() {
            by_lhs[p.lhs as usize].push(i as u32);
        }

        let fixpoint = |sym_ok: &dyn Fn(&Sym, &[bool]) -> bool| {
            let mut flag = vec![false; n];
            loop {
                let mut changed = false;
                for p in &low.prods {
                    if !flag[p.lhs as usize] && p.rhs.iter().all(|s| sym_ok(s, &flag)) {
                        flag[p.lhs as usize] = true;
                        changed = true;
                    }
                }
                if !changed {
                    return flag;
                }
            }
        };
        let nullable = fixpoint(&|s, flag| matches!(s, Sym::NonTerm(b) if flag[*b as usize]));
        let classes = &low.classes;
        let productive = fixpoint(&|s, flag| match s {
            Sym::Term(c) => !classes[*c as usize].is_empty_set(),
            Sym::NonTerm(b) => flag[*b as usize],
        });
        if !productive[root_id as usize] {
            return Err(GrammarError::EmptyLanguage(root.to_string()));
        }

        Ok(GrammarSpec {
            source: source.to_string(),
            root: root.to_string(),
            names: low.names,
            classes: low.classes,
            prods: low.prods,
            by_lhs,
            nullable,
            start_prod,
        })
    }

    /// The shipped JSON grammar.
    pub fn json() -> Self {
        Self::parse(JSON_GBNF).expect("shipped json grammar is valid")
    }

    /// Grammar text in GBNF form, as sent to inference servers.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    /// Earley recognition: true iff `text` derives from the root rule.
    pub fn recognize(&self, text: &str) -> bool {
        let input: Vec<char> = text.chars().collect();
        let mut sets: Vec<EarleySet> = (0..=input.len()).map(|_| EarleySet::default()).collect();
        sets[0].add(Item {
            prod: self.start_prod,
            dot: 0,
            origin: 0,
        });

        for i in 0..=input.len() {
            let mut k = 0;
            while k < sets[i].items.len() {
                let item = sets[i].items[k];
                k += 1;
                let prod = &self.prods[item.prod as usize];
                match prod.rhs.get(item.dot as usize) {
                    None => {
                        let origin = item.origin as usize;
                        let parents = sets[origin].waiting.get(&prod.lhs).cloned().unwrap_or_default();
                        for parent in parents {
                            sets[i].add(parent.advance());
                        }
                    }
                    Some(Sym::NonTerm(b)) => {
                        sets[i].waiting.entry(*b).or_default().push(item);
                        for &p in &self.by_lhs[*b as usize] {
                            sets[i].add(Item {
                                prod: p,
                                dot: 0,
                                origin: i as u32,
                            });
                        }
                        if self.nullable[*b as usize] {
                            sets[i].add(item.advance());
                        }
                    }
                    Some(Sym::Term(c)) => {
                        if let Some(&ch) = input.get(i) {
                            if self.classes[*c as usize].matches(ch) {
                                sets[i + 1].add(item.advance());
                            }
                        }
                    }
                }
            }
            if i < input.len() && sets[i + 1].items.is_empty() {
                return false;
            }
        }
        sets[input.len()].seen.contains(&Item {
            prod: self.start_prod,
            dot: 1,
            origin: 0,
        })
    }

    /// Nonterminals after desugaring, including generated helpers.
    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }
}

/// Free-function form of [`GrammarSpec::recognize`].
pub fn recognize(grammar: &GrammarSpec, text: &str) -> bool {
    grammar.recognize(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: u32,
    dot: u32,
    origin: u32,
}

impl Item {
    fn advance(self) -> Item {
        Item {
            dot: self.dot + 1,
            ..self
        }
    }
}

#[derive(Default)]
struct EarleySet {
    items: Vec<Item>,
    seen: HashSet<Item>,
    waiting: HashMap<u32, Vec<Item>>,
}

impl EarleySet {
    fn add(&mut self, item: Item) {
        if self.seen.insert(item) {
            self.items.push(item);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_grammar_basics() {
        let g = GrammarSpec::json();
        assert!(g.recognize(r#"{"plan":[]}"#));
        assert!(!g.recognize(r#"{"plan":"#));
        assert!(g.recognize("{\"a\" : [1, -2.5e+3, true, null, {\"b\": \"\\u00e9\\n\"}]}\n"));
        assert!(!g.recognize("[1,2]"));
        assert!(!g.recognize(r#"{"a":01}"#));
        assert!(!g.recognize(r#"{"a":1,}"#));
        assert!(!g.recognize("{\"a\":\"\u{1}\"}"));
        assert!(!g.recognize(""));
    }

    #[test]
    fn repetition_operators() {
        let g = GrammarSpec::parse("root ::= \"a\"{2,3} [0-9]+ \"x\"? ")
            .unwrap();
        assert!(g.recognize("aa1"));
        assert!(g.recognize("aaa123x"));
        assert!(!g.recognize("a1"));
        assert!(!g.recognize("aaaa1"));
        assert!(!g.recognize("aa"));
        let exact = GrammarSpec::parse("root ::= [ab]{2}").unwrap();
        assert!(exact.recognize("ba"));
        assert!(!exact.recognize("bab"));
        let open = GrammarSpec::parse("root ::= \"z\"{1,}").unwrap();
        assert!(open.recognize("zzzz") && !open.recognize(""));
    }

    #[test]
    fn left_and_right_recursion_and_nullables() {
        let g = GrammarSpec::parse(
            "root ::= list\nlist ::= list \",\" item | item\nitem ::= opt \"x\" opt\nopt ::= | \"-\"",
        )
        .unwrap();
        assert!(g.recognize("x,-x,x-,-x-"));
        assert!(!g.recognize("x,,x"));
        let r = GrammarSpec::parse("root ::= \"(\" root \")\" | ").unwrap();
        assert!(r.recognize("((()))") && r.recognize("") && !r.recognize("(()"));
    }

    #[test]
    fn classes_and_escapes() {
        let g = GrammarSpec::parse(r#"root ::= [^a-c\x00] "\t" [\]\-] ."#).unwrap();
        assert!(g.recognize("d\t]é"));
        assert!(g.recognize("z\t-q"));
        assert!(!g.recognize("b\t]q"));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            GrammarSpec::parse("root ::= missing"),
            Err(GrammarError::Undefined { ref name, line: 1, col: 10 }) if name == "missing"
        ));
        assert!(matches!(
            GrammarSpec::parse("other ::= \"a\""),
            Err(GrammarError::MissingRoot(_))
        ));
        assert!(matches!(
            GrammarSpec::parse("root ::= root \"a\""),
            Err(GrammarError::EmptyLanguage(_))
        ));
        assert!(matches!(
            GrammarSpec::parse("root ::= [^\\x00-\\U0010FFFF]"),
            Err(GrammarError::EmptyLanguage(_))
        ));
        assert!(matches!(
            GrammarSpec::parse("root ::= \"a\nroot2 ::= x"),
            Err(GrammarError::Syntax { .. })
        ));
        assert!(matches!(
            GrammarSpec::parse("root ::= \"a\"\nroot ::= \"b\""),
            Err(GrammarError::Redefined(_))
        ));
        assert!(matches!(
            GrammarSpec::parse("root ::= (\"a\""),
            Err(GrammarError::Syntax { .. })
        ));
    }

    #[test]
    fn multi_line_rules_continue_until_next_definition() {
        let g = GrammarSpec::parse("root ::=\n  \"a\"\n  \"b\" # comment\nb ::= \"c\"").unwrap();
        assert!(g.recognize("ab"));
        assert!(g.nonterminal_count() >= 2);
    }
}
