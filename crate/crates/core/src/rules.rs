//! Rule language and saturation.
//!
//! ```text
//! RULE knows-from-letter:
//!   WHEN ?m a :Letter . ?m :author ?a . ?m :to ?b .
//!        ?m :writingTime ?w . ?w time:hasBeginning ?t1 .
//!   THEN FLUENT ?a :knows ?b DURING [?t1, END] .
//! ```
//!
//! Static rules derive plain triples into `<sys:inferred>` and may not create
//! nodes. Fluent rules create reified fluents through
//! [`temporal::assert_fluent`], which skips any candidate already covered by a
//! fluent on the same `(subject, property, object)`. [`saturate`] alternates
//! the two until a full round adds nothing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rdf_io::Diagnostic;
use crate::store::{Dataset, Quad, QuadPattern, StoreError, Term};
use crate::temporal::{self, FluentOutcome, FluentSpec, Instant, Interval, Provenance, TemporalError};
use crate::vocab::{self, graph, model, sism, time};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(usize),
    Const(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    fn terms(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    fn holds(self, a: Instant, b: Instant) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Var(usize),
    Instant(Instant),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub left: Operand,
    pub op: CmpOp,
    pub right: Operand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentTemplate {
    pub subject: PatternTerm,
    pub property: Term,
    pub object: PatternTerm,
    pub begin: Operand,
    pub end: Operand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    Static(Vec<TriplePattern>),
    Fluent(FluentTemplate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Static,
    FluentGenerating,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub vars: Vec<String>,
    pub body: Vec<TriplePattern>,
    pub conditions: Vec<Comparison>,
    pub head: Head,
    /// The rule's text as written, used when storing rules in the dataset.
    pub source: String,
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        match self.head {
            Head::Static(_) => RuleKind::Static,
            Head::Fluent(_) => RuleKind::FluentGenerating,
        }
    }

    pub fn is_static(&self) -> bool {
        self.kind() == RuleKind::Static
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line_starts: Vec<usize>,
    prefixes: HashMap<String, String>,
    vars: Vec<String>,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

impl Parser {
    fn new(text: &str) -> Self {
        let chars: Vec<char> = text.chars().collect();
        let mut line_starts = vec![0];
        for (i, c) in chars.iter().enumerate() {
            if *c == '\n' {
                line_starts.push(i + 1);
            }
        }
        Parser {
            chars,
            pos: 0,
            line_starts,
            prefixes: vocab::default_prefixes()
                .into_iter()
                .map(|(p, n)| (p.to_string(), n.to_string()))
                .collect(),
            vars: Vec::new(),
        }
    }

    fn err_at(&self, pos: usize, message: impl Into<String>) -> Diagnostic {
        let line = self.line_starts.partition_point(|&s| s <= pos);
        Diagnostic {
            line,
            column: pos - self.line_starts[line - 1] + 1,
            message: message.into(),
        }
    }

    fn err(&self, message: impl Into<String>) -> Diagnostic {
        self.err_at(self.pos, message)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn at_eof(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    /// True if the next word is exactly `kw` (not a prefix of a longer name).
    fn at_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let n = kw.chars().count();
        kw.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
            && !self.peek_at(n).is_some_and(|c| is_name_char(c) || c == ':')
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += kw.chars().count();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {kw}")))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), Diagnostic> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn read_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn read_iriref(&mut self) -> Result<String, Diagnostic> {
        self.expect('<')?;
        let iri = self.read_while(|c| c != '>' && c != '\n' && !c.is_whitespace());
        if !self.eat('>') {
            return Err(self.err("unterminated IRI"));
        }
        Ok(iri)
    }

    fn read_pname(&mut self) -> Result<String, Diagnostic> {
        let start = self.pos;
        let prefix = self.read_while(is_name_char);
        if self.peek() != Some(':') {
            return Err(self.err_at(start, format!("unexpected token {prefix:?}")));
        }
        self.pos += 1;
        let mut local = self.read_while(|c| is_name_char(c) || c == '.');
        while local.ends_with('.') {
            local.pop();
            self.pos -= 1;
        }
        let Some(ns) = self.prefixes.get(&prefix) else {
            return Err(self.err_at(start, format!("undeclared prefix {prefix:?}")));
        };
        Ok(format!("{ns}{local}"))
    }

    fn read_var(&mut self) -> Result<(usize, usize), Diagnostic> {
        let start = self.pos;
        self.pos += 1;
        let name = self.read_while(is_name_char);
        if name.is_empty() {
            return Err(self.err_at(start, "empty variable name"));
        }
        let idx = match self.vars.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                self.vars.push(name);
                self.vars.len() - 1
            }
        };
        Ok((idx, start))
    }

    fn read_string(&mut self) -> Result<String, Diagnostic> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => return Err(self.err_at(start, "unterminated string")),
                Some('"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    let c = self.peek_at(1).ok_or_else(|| self.err("unterminated string"))?;
                    out.push(match c {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '"' | '\\' | '\'' => c,
                        _ => return Err(self.err(format!("unknown escape \\{c}"))),
                    });
                    self.pos += 2;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn read_literal(&mut self) -> Result<Term, Diagnostic> {
        let lexical = self.read_string()?;
        if self.peek() == Some('@') {
            self.pos += 1;
            let tag = self.read_while(|c| c.is_ascii_alphanumeric() || c == '-');
            return Ok(Term::lang_string(lexical, tag));
        }
        if self.peek() == Some('^') && self.peek_at(1) == Some('^') {
            self.pos += 2;
            let dt = if self.peek() == Some('<') {
                self.read_iriref()?
            } else {
                self.read_pname()?
            };
            return Ok(Term::literal(lexical, dt));
        }
        Ok(Term::string(lexical))
    }

    /// A bare number or `YYYY-MM-DD` date.
    fn read_number(&mut self) -> Result<Term, Diagnostic> {
        let start = self.pos;
        let text = self.read_while(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.');
        let mut text = text;
        while text.ends_with('.') {
            text.pop();
            self.pos -= 1;
        }
        if temporal::parse_date_lexical(&text, vocab::xsd::DATE).is_some() && text.len() == 10 {
            return Ok(Term::literal(text, vocab::xsd::DATE));
        }
        if let Ok(i) = text.parse::<i64>() {
            return Ok(Term::integer(i));
        }
        if text.parse::<f64>().is_ok() {
            return Ok(Term::literal(text, vocab::xsd::DECIMAL));
        }
        Err(self.err_at(start, format!("malformed number {text:?}")))
    }

    /// `static_head` makes anonymous nodes an error rather than a syntax error.
    fn read_term(&mut self, static_head: bool) -> Result<(PatternTerm, usize), Diagnostic> {
        self.skip_ws();
        let start = self.pos;
        let t = match self.peek() {
            None => return Err(self.err("unexpected end of input")),
            Some('?') => return self.read_var().map(|(i, p)| (PatternTerm::Var(i), p)),
            Some('[') | Some('_') if static_head => return Err(self.err("fresh node in static head")),
            Some('[') | Some('_') => return Err(self.err("anonymous nodes are not allowed in rule patterns")),
            Some('<') => Term::iri(self.read_iriref()?),
            Some('"') => self.read_literal()?,
            Some(c) if c.is_ascii_digit() => self.read_number()?,
            Some('a') if self.at_keyword("a") => {
                self.pos += 1;
                Term::iri(vocab::rdf::TYPE)
            }
            Some(c) if is_name_char(c) || c == ':' => {
                if self.at_keyword("true") || self.at_keyword("false") {
                    let v = self.read_while(is_name_char);
                    Term::literal(v, vocab::xsd::BOOLEAN)
                } else {
                    Term::iri(self.read_pname()?)
                }
            }
            Some(c) => return Err(self.err(format!("unexpected character {c:?}"))),
        };
        Ok((PatternTerm::Const(t), start))
    }

    fn read_pattern(&mut self, static_head: bool) -> Result<(TriplePattern, Vec<(usize, usize)>), Diagnostic> {
        let mut vars = Vec::new();
        let mut terms = Vec::with_capacity(3);
        for i in 0..3 {
            let (t, at) = self.read_term(static_head)?;
            if let PatternTerm::Const(c) = &t {
                if i < 2 && c.is_literal() {
                    return Err(self.err_at(at, "literal in subject or predicate position"));
                }
            }
            if let PatternTerm::Var(v) = t {
                vars.push((v, at));
            }
            terms.push(t);
        }
        let mut it = terms.into_iter();
        let pattern = TriplePattern {
            subject: it.next().unwrap(),
            predicate: it.next().unwrap(),
            object: it.next().unwrap(),
        };
        Ok((pattern, vars))
    }

    fn read_operand(&mut self) -> Result<(Operand, Option<(usize, usize)>), Diagnostic> {
        self.skip_ws();
        let start = self.pos;
        if self.eat_keyword("START") {
            return Ok((Operand::Instant(Instant::Start), None));
        }
        if self.eat_keyword("END") {
            return Ok((Operand::Instant(Instant::End), None));
        }
        let (t, at) = self.read_term(false)?;
        match t {
            PatternTerm::Var(v) => Ok((Operand::Var(v), Some((v, at)))),
            PatternTerm::Const(Term::Literal(l)) => {
                let date = temporal::parse_date_lexical(&l.lexical, &l.datatype)
                    .or_else(|| temporal::parse_date_lexical(&l.lexical, vocab::xsd::G_YEAR))
                    .ok_or_else(|| self.err_at(start, format!("{:?} is not a date", l.lexical)))?;
                Ok((Operand::Instant(Instant::Date(date.0)), None))
            }
            PatternTerm::Const(_) => Err(self.err_at(start, "expected a variable, date, START or END")),
        }
    }

    fn read_cmp_op(&mut self) -> Result<CmpOp, Diagnostic> {
        self.skip_ws();
        let op = match (self.peek(), self.peek_at(1)) {
            (Some('<'), Some('=')) => CmpOp::Le,
            (Some('>'), Some('=')) => CmpOp::Ge,
            (Some('<'), _) => CmpOp::Lt,
            (Some('>'), _) => CmpOp::Gt,
            (Some('='), _) => CmpOp::Eq,
            _ => return Err(self.err("expected a comparison operator")),
        };
        self.pos += if matches!(op, CmpOp::Le | CmpOp::Ge) { 2 } else { 1 };
        if op == CmpOp::Eq && self.peek() == Some('=') {
            self.pos += 1;
        }
        Ok(op)
    }

    fn read_directive(&mut self) -> Result<(), Diagnostic> {
        let sparql = !self.eat('@');
        self.expect_keyword(if sparql { "PREFIX" } else { "prefix" })?;
        self.skip_ws();
        let prefix = self.read_while(is_name_char);
        if !self.eat(':') {
            return Err(self.err("expected ':' after prefix name"));
        }
        self.skip_ws();
        let ns = self.read_iriref()?;
        if !sparql {
            self.expect('.')?;
        }
        self.prefixes.insert(prefix, ns);
        Ok(())
    }

    fn read_rule(&mut self) -> Result<Rule, Diagnostic> {
        self.skip_ws();
        let rule_start = self.pos;
        self.vars.clear();
        self.expect_keyword("RULE")?;
        self.skip_ws();
        let id = self.read_while(|c| is_name_char(c) || c == '.');
        if id.is_empty() {
            return Err(self.err("expected a rule id"));
        }
        self.expect(':')?;
        self.expect_keyword("WHEN")?;

        let mut body = Vec::new();
        let mut bound = BTreeSet::new();
        loop {
            let (p, vars) = self.read_pattern(false)?;
            bound.extend(vars.iter().map(|(v, _)| *v));
            body.push(p);
            let dot = self.eat('.');
            if self.at_keyword("IF") || self.at_keyword("THEN") {
                break;
            }
            if !dot {
                return Err(self.err("expected '.', IF or THEN"));
            }
        }

        let unbound = |p: &Parser, v: usize, at: usize, what: &str| -> Result<(), Diagnostic> {
            if bound.contains(&v) {
                Ok(())
            } else {
                Err(p.err_at(at, format!("unbound {what} variable ?{}", p.vars[v])))
            }
        };

        let mut conditions = Vec::new();
        if self.eat_keyword("IF") {
            loop {
                let (left, lv) = self.read_operand()?;
                let op = self.read_cmp_op()?;
                let (right, rv) = self.read_operand()?;
                for (v, at) in lv.into_iter().chain(rv) {
                    unbound(self, v, at, "condition")?;
                }
                conditions.push(Comparison { left, op, right });
                self.skip_ws();
                if self.peek() == Some('&') && self.peek_at(1) == Some('&') {
                    self.pos += 2;
                } else {
                    self.eat(',');
                }
                if self.at_keyword("THEN") {
                    break;
                }
            }
        }
        self.expect_keyword("THEN")?;

        let head = if self.eat_keyword("FLUENT") {
            let (subject, s_at) = self.read_term(false)?;
            let (property, p_at) = self.read_term(false)?;
            let (object, o_at) = self.read_term(false)?;
            let property = match property {
                PatternTerm::Const(t @ Term::Iri { .. }) => t,
                _ => return Err(self.err_at(p_at, "fluent property must be an IRI")),
            };
            if let PatternTerm::Const(t) = &subject {
                if t.is_literal() {
                    return Err(self.err_at(s_at, "literal fluent subject"));
                }
            }
            for (t, at) in [(&subject, s_at), (&object, o_at)] {
                if let PatternTerm::Var(v) = t {
                    unbound(self, *v, at, "head")?;
                }
            }
            self.expect_keyword("DURING")?;
            self.expect('[')?;
            let (begin, bv) = self.read_operand()?;
            self.expect(',')?;
            let (end, ev) = self.read_operand()?;
            self.expect(']')?;
            for (v, at) in bv.into_iter().chain(ev) {
                unbound(self, v, at, "head")?;
            }
            if let (Operand::Instant(b), Operand::Instant(e)) = (&begin, &end) {
                if b > e {
                    return Err(self.err(format!("empty interval [{b}, {e}]")));
                }
            }
            self.expect('.')?;
            Head::Fluent(FluentTemplate {
                subject,
                property,
                object,
                begin,
                end,
            })
        } else {
            let mut heads = Vec::new();
            loop {
                let (p, vars) = self.read_pattern(true)?;
                for (v, at) in vars {
                    unbound(self, v, at, "head")?;
                }
                heads.push(p);
                self.expect('.')?;
                if self.at_eof() || self.at_keyword("RULE") || self.at_keyword("@prefix") || self.at_keyword("PREFIX") {
                    break;
                }
                if self.peek() == Some('@') {
                    break;
                }
            }
            Head::Static(heads)
        };

        let source: String = self.chars[rule_start..self.pos].iter().collect();
        Ok(Rule {
            id,
            vars: self.vars.clone(),
            body,
            conditions,
            head,
            source,
        })
    }
}

/// Compiles every rule in `text`. Prefix directives (`@prefix p: <...> .`)
/// may appear between rules; the default prefixes of
/// [`vocab::default_prefixes`] are always available.
pub fn compile_rules(text: &str) -> Result<Vec<Rule>, Diagnostic> {
    let mut p = Parser::new(text);
    let mut rules: Vec<Rule> = Vec::new();
    while !p.at_eof() {
        if p.peek() == Some('@') || p.at_keyword("PREFIX") {
            p.read_directive()?;
            continue;
        }
        let start = p.pos;
        let rule = p.read_rule()?;
        if rules.iter().any(|r| r.id == rule.id) {
            return Err(p.err_at(start, format!("duplicate rule id {:?}", rule.id)));
        }
        rules.push(rule);
    }
    Ok(rules)
}

/// Compiles exactly one rule.
pub fn compile_rule(text: &str) -> Result<Rule, Diagnostic> {
    let mut rules = compile_rules(text)?;
    match rules.len() {
        1 => Ok(rules.pop().unwrap()),
        0 => Err(Diagnostic {
            line: 1,
            column: 1,
            message: "expected a rule".into(),
        }),
        _ => Err(Diagnostic {
            line: 1,
            column: 1,
            message: "expected a single rule".into(),
        }),
    }
}

const BUILTIN_RULES: &str = "
RULE rdfs-subclass-transitive: WHEN ?a rdfs:subClassOf ?b . ?b rdfs:subClassOf ?c . THEN ?a rdfs:subClassOf ?c .
RULE rdfs-type: WHEN ?x a ?c . ?c rdfs:subClassOf ?d . THEN ?x a ?d .
RULE rdfs-subproperty-transitive: WHEN ?p rdfs:subPropertyOf ?q . ?q rdfs:subPropertyOf ?r . THEN ?p rdfs:subPropertyOf ?r .
RULE rdfs-subproperty: WHEN ?x ?p ?y . ?p rdfs:subPropertyOf ?q . THEN ?x ?q ?y .
";

/// The schema rules applied with every static rule set.
pub fn builtin_rules() -> Vec<Rule> {
    compile_rules(BUILTIN_RULES).expect("builtin rules compile")
}

// ---------------------------------------------------------------------------
// Evaluation

type Binding = Vec<Option<Term>>;

fn excluded_graph(g: &Term) -> bool {
    matches!(g.as_iri(), Some(graph::PROVENANCE) | Some(graph::RULES))
}

fn resolve(t: &PatternTerm, b: &Binding) -> Option<Term> {
    match t {
        PatternTerm::Const(c) => Some(c.clone()),
        PatternTerm::Var(v) => b[*v].clone(),
    }
}

fn unify(t: &PatternTerm, value: &Term, b: &mut Binding) -> bool {
    match t {
        PatternTerm::Const(c) => c == value,
        PatternTerm::Var(v) => match &b[*v] {
            Some(existing) => existing == value,
            None => {
                b[*v] = Some(value.clone());
                true
            }
        },
    }
}

fn operand_instant(ds: &Dataset, o: &Operand, b: &Binding) -> Option<Instant> {
    match o {
        Operand::Instant(i) => Some(*i),
        Operand::Var(v) => b[*v].as_ref().and_then(|t| Instant::from_term(ds, t)),
    }
}

fn extend(ds: &Dataset, rule: &Rule, remaining: &mut Vec<&TriplePattern>, b: &mut Binding, out: &mut BTreeSet<Vec<Term>>) {
    if remaining.is_empty() {
        let all_hold = rule.conditions.iter().all(|c| {
            match (operand_instant(ds, &c.left, b), operand_instant(ds, &c.right, b)) {
                (Some(l), Some(r)) => c.op.holds(l, r),
                _ => false,
            }
        });
        if all_hold {
            out.insert(b.iter().map(|t| t.clone().unwrap_or_else(|| Term::string(""))).collect());
        }
        return;
    }
    // Most constrained pattern first.
    let (idx, _) = remaining
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.terms().iter().filter(|t| resolve(t, b).is_some()).count()))
        .max_by_key(|&(i, n)| (n, std::cmp::Reverse(i)))
        .unwrap();
    let pattern = remaining.remove(idx);
    let mut qp = QuadPattern::any();
    if let Some(t) = resolve(&pattern.subject, b) {
        qp = qp.subject(t);
    }
    if let Some(t) = resolve(&pattern.predicate, b) {
        qp = qp.predicate(t);
    }
    if let Some(t) = resolve(&pattern.object, b) {
        qp = qp.object(t);
    }
    let candidates: Vec<&Quad> = ds.iter_matching(&qp).filter(|q| !excluded_graph(&q.graph)).collect();
    for q in candidates {
        let mut nb = b.clone();
        if unify(&pattern.subject, &q.subject, &mut nb)
            && unify(&pattern.predicate, &q.predicate, &mut nb)
            && unify(&pattern.object, &q.object, &mut nb)
        {
            extend(ds, rule, remaining, &mut nb, out);
        }
    }
    remaining.insert(idx, pattern);
}

/// All distinct variable bindings satisfying the rule body and conditions,
/// in sorted order.
pub fn body_matches(ds: &Dataset, rule: &Rule) -> Vec<Vec<Term>> {
    let mut out = BTreeSet::new();
    let mut remaining: Vec<&TriplePattern> = rule.body.iter().collect();
    let mut b: Binding = vec![None; rule.vars.len()];
    extend(ds, rule, &mut remaining, &mut b, &mut out);
    out.into_iter().collect()
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule {0} is not a static rule")]
    NotStatic(String),
    #[error("rule {0} is not a fluent-generating rule")]
    NotFluent(String),
    #[error("saturation did not reach a fixpoint within {0} rounds")]
    RoundCapExceeded(usize),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error("stored rules: {0}")]
    StoredRules(Diagnostic),
}

fn derivation_node(s: &Term, p: &Term, o: &Term) -> Term {
    let digest = Sha256::digest(format!("{s}\n{p}\n{o}").as_bytes());
    Term::skolem(format!("deriv-{}", hex::encode(&digest[..8])))
}

fn record_derivation(ds: &mut Dataset, s: &Term, p: &Term, o: &Term, rule: &str) -> Result<(), StoreError> {
    let node = derivation_node(s, p, o);
    let g = Term::iri(graph::PROVENANCE);
    ds.add(node.clone(), Term::iri(vocab::rdf::TYPE), Term::iri(sism::DERIVATION), &g)?;
    ds.add(node.clone(), Term::iri(sism::DERIVED_SUBJECT), s.clone(), &g)?;
    ds.add(node.clone(), Term::iri(sism::DERIVED_PREDICATE), p.clone(), &g)?;
    ds.add(node.clone(), Term::iri(sism::DERIVED_OBJECT), o.clone(), &g)?;
    ds.add(node, Term::iri(sism::DERIVED_BY), Term::string(rule), &g)?;
    Ok(())
}

/// Ids of the rules recorded as deriving `(s, p, o)`, sorted.
pub fn derived_by(ds: &Dataset, s: &Term, p: &Term, o: &Term) -> Vec<String> {
    let node = derivation_node(s, p, o);
    let mut ids: Vec<String> = ds
        .objects(&node, sism::DERIVED_BY)
        .iter()
        .filter_map(|t| t.lexical().map(str::to_string))
        .collect();
    ids.sort();
    ids
}

fn instantiate(t: &PatternTerm, row: &[Term]) -> Term {
    match t {
        PatternTerm::Const(c) => c.clone(),
        PatternTerm::Var(v) => row[*v].clone(),
    }
}

/// Runs the static rules, together with [`builtin_rules`], to their least
/// fixpoint. New triples go to `<sys:inferred>`; a triple already present in
/// any graph is not re-derived. Returns the number of new triples.
pub fn apply_static_rules(ds: &mut Dataset, rules: &[Rule]) -> Result<usize, RuleError> {
    if let Some(r) = rules.iter().find(|r| !r.is_static()) {
        return Err(RuleError::NotStatic(r.id.clone()));
    }
    let mut all = builtin_rules();
    all.extend(rules.iter().cloned());
    let g = Term::iri(graph::INFERRED);
    let mut total = 0;
    loop {
        let mut fresh: BTreeMap<(Term, Term, Term), BTreeSet<&str>> = BTreeMap::new();
        for rule in &all {
            let Head::Static(heads) = &rule.head else { unreachable!() };
            for row in body_matches(ds, rule) {
                for h in heads {
                    let (s, p, o) = (
                        instantiate(&h.subject, &row),
                        instantiate(&h.predicate, &row),
                        instantiate(&h.object, &row),
                    );
                    // Bindings that would put a literal in subject position or
                    // a non-IRI in predicate position produce nothing.
                    if s.is_literal() || p.as_iri().is_none() || ds.contains_triple(&s, &p, &o) {
                        continue;
                    }
                    fresh.entry((s, p, o)).or_default().insert(&rule.id);
                }
            }
        }
        if fresh.is_empty() {
            return Ok(total);
        }
        for ((s, p, o), ids) in fresh {
            ds.add(s.clone(), p.clone(), o.clone(), &g)?;
            for id in ids {
                record_derivation(ds, &s, &p, &o, id)?;
            }
            total += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FluentRoundReport {
    pub inserted: usize,
    pub blocked: usize,
    pub diagnostics: Vec<String>,
}

/// Applies each fluent rule once, in order. A candidate covered by an
/// existing fluent (including one inserted earlier in the same call) is
/// counted as blocked.
pub fn apply_fluent_rules(ds: &mut Dataset, rules: &[Rule]) -> Result<FluentRoundReport, RuleError> {
    let mut report = FluentRoundReport::default();
    let mut blocked = BTreeSet::new();
    let mut inserted = BTreeSet::new();
    apply_fluent_rules_tracked(ds, rules, &mut report.diagnostics, &mut inserted, &mut blocked)?;
    report.inserted = inserted.len();
    report.blocked = blocked.difference(&inserted).count();
    Ok(report)
}

type FluentKey = (Term, Term, Term, Interval);

fn apply_fluent_rules_tracked(
    ds: &mut Dataset,
    rules: &[Rule],
    diagnostics: &mut Vec<String>,
    inserted: &mut BTreeSet<FluentKey>,
    blocked: &mut BTreeSet<FluentKey>,
) -> Result<(), RuleError> {
    if let Some(r) = rules.iter().find(|r| r.is_static()) {
        return Err(RuleError::NotFluent(r.id.clone()));
    }
    for rule in rules {
        let Head::Fluent(t) = &rule.head else { unreachable!() };
        for row in body_matches(ds, rule) {
            let b: Binding = row.iter().cloned().map(Some).collect();
            let (Some(begin), Some(end)) = (operand_instant(ds, &t.begin, &b), operand_instant(ds, &t.end, &b)) else {
                diagnostics.push(format!("{}: interval bound is not a date, match skipped", rule.id));
                continue;
            };
            let during = match Interval::new(begin, end) {
                Ok(i) => i,
                Err(e) => {
                    diagnostics.push(format!("{}: {e}, match skipped", rule.id));
                    continue;
                }
            };
            let subject = instantiate(&t.subject, &row);
            let object = instantiate(&t.object, &row);
            if subject.is_literal() {
                diagnostics.push(format!("{}: literal fluent subject, match skipped", rule.id));
                continue;
            }
            let key = (subject.clone(), t.property.clone(), object.clone(), during);
            let spec = FluentSpec::new(subject, t.property.clone(), object, during)
                .with_provenance(Provenance::Rule(rule.id.clone()));
            match temporal::assert_fluent(ds, spec)? {
                FluentOutcome::Inserted(_) => {
                    inserted.insert(key);
                }
                FluentOutcome::BlockedSubsumed(_) => {
                    blocked.insert(key);
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SaturationReport {
    pub rounds: usize,
    pub new_static_triples: usize,
    pub new_fluents: usize,
    /// Distinct fluent candidates that were covered by an existing fluent and
    /// never inserted during this run.
    pub blocked_fluents: usize,
    pub diagnostics: Vec<String>,
}

impl fmt::Display for SaturationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rounds: {}", self.rounds)?;
        writeln!(f, "new static triples: {}", self.new_static_triples)?;
        writeln!(f, "new fluents: {}", self.new_fluents)?;
        write!(f, "blocked fluents: {}", self.blocked_fluents)
    }
}

pub const DEFAULT_MAX_ROUNDS: usize = 64;

/// Alternates static fixpoints and fluent rounds until a full round adds
/// nothing. Rules may be given in any mix; they are split by kind.
pub fn saturate(ds: &mut Dataset, rules: &[Rule], max_rounds: usize) -> Result<SaturationReport, RuleError> {
    let (statics, fluents): (Vec<Rule>, Vec<Rule>) = rules.iter().cloned().partition(Rule::is_static);
    let mut report = SaturationReport {
        rounds: 0,
        new_static_triples: 0,
        new_fluents: 0,
        blocked_fluents: 0,
        diagnostics: Vec::new(),
    };
    let mut inserted = BTreeSet::new();
    let mut blocked = BTreeSet::new();
    loop {
        if report.rounds == max_rounds {
            return Err(RuleError::RoundCapExceeded(max_rounds));
        }
        report.rounds += 1;
        let added = apply_static_rules(ds, &statics)?;
        let before = inserted.len();
        let mut diags = Vec::new();
        apply_fluent_rules_tracked(ds, &fluents, &mut diags, &mut inserted, &mut blocked)?;
        report.new_static_triples += added;
        for d in diags {
            if !report.diagnostics.contains(&d) {
                report.diagnostics.push(d);
            }
        }
        if added == 0 && inserted.len() == before {
            break;
        }
    }
    report.new_fluents = inserted.len();
    report.blocked_fluents = blocked.difference(&inserted).count();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stored rules

/// Replaces the rule set kept in `<sys:rules>`.
pub fn store_rules(ds: &mut Dataset, rules: &[Rule]) -> Result<(), StoreError> {
    let g = Term::iri(graph::RULES);
    ds.remove_graph(&g);
    for r in rules {
        ds.add(
            Term::iri(format!("{}rule/{}", vocab::MODEL, r.id)),
            Term::iri(sism::RULE_SOURCE),
            Term::string(r.source.trim()),
            &g,
        )?;
    }
    Ok(())
}

/// The rule set kept in `<sys:rules>`, in id order.
pub fn stored_rules(ds: &Dataset) -> Result<Vec<Rule>, RuleError> {
    let pat = QuadPattern::any()
        .predicate(Term::iri(sism::RULE_SOURCE))
        .graph(Term::iri(graph::RULES));
    let mut rules = Vec::new();
    for q in ds.iter_matching(&pat) {
        let text = q.object.lexical().unwrap_or_default();
        rules.push(compile_rule(text).map_err(RuleError::StoredRules)?);
    }
    rules.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(rules)
}

// ---------------------------------------------------------------------------
// Writing times

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contradiction {
    pub manuscript: Term,
    pub not_before: Instant,
    pub not_after: Instant,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WritingTimeReport {
    pub updated: usize,
    pub contradictions: Vec<Contradiction>,
}

fn instants(ds: &Dataset, s: &Term, p: &str) -> Vec<Instant> {
    ds.objects(s, p).iter().filter_map(|t| Instant::from_term(ds, t)).collect()
}

/// The inferred interval for one manuscript: `[max notBefore, min notAfter]`.
pub fn writing_time_bounds(ds: &Dataset, manuscript: &Term) -> Option<Result<Interval, Contradiction>> {
    let lows = instants(ds, manuscript, model::NOT_BEFORE);
    let highs = instants(ds, manuscript, model::NOT_AFTER);
    if lows.is_empty() && highs.is_empty() {
        return None;
    }
    let begin = lows.into_iter().max().unwrap_or(Instant::Start);
    let end = highs.into_iter().min().unwrap_or(Instant::End);
    Some(Interval::new(begin, end).map_err(|_| Contradiction {
        manuscript: manuscript.clone(),
        not_before: begin,
        not_after: end,
    }))
}

fn inferred_node(manuscript: &Term) -> Term {
    let digest = Sha256::digest(manuscript.to_string().as_bytes());
    Term::skolem(format!("iwt-{}", hex::encode(&digest[..8])))
}

/// Reads an interval node (`time:hasBeginning` / `time:hasEnd`). A node with
/// only a beginning is read as a single day.
pub fn read_interval(ds: &Dataset, node: &Term) -> Option<Interval> {
    match temporal::read_interval_bounds(ds, node) {
        (Some(b), Some(e)) => Interval::new(b, e).ok(),
        (Some(b), None) => Interval::new(b, b).ok(),
        _ => None,
    }
}

/// Sets `:inferredWritingTime` on every manuscript that has dating bounds and
/// no explicit `:writingTime`. Stale values are replaced; manuscripts whose
/// bounds contradict each other lose any inferred value and are reported.
pub fn infer_writing_times(ds: &mut Dataset) -> Result<WritingTimeReport, StoreError> {
    let mut manuscripts = BTreeSet::new();
    for p in [model::NOT_BEFORE, model::NOT_AFTER] {
        for q in ds.iter_matching(&QuadPattern::any().predicate(Term::iri(p))) {
            if !excluded_graph(&q.graph) {
                manuscripts.insert(q.subject.clone());
            }
        }
    }
    let g = Term::iri(graph::INFERRED);
    let link = Term::iri(model::INFERRED_WRITING_TIME);
    let mut report = WritingTimeReport::default();
    for m in manuscripts {
        if ds.object(&m, model::WRITING_TIME).is_some() {
            continue;
        }
        let node = inferred_node(&m);
        let current = ds
            .contains_triple(&m, &link, &node)
            .then(|| read_interval(ds, &node))
            .flatten();
        let wanted = match writing_time_bounds(ds, &m) {
            Some(Ok(i)) => Some(i),
            Some(Err(c)) => {
                report.contradictions.push(c);
                None
            }
            None => None,
        };
        if current == wanted {
            continue;
        }
        for q in ds.match_pattern(&QuadPattern::any().subject(node.clone())) {
            ds.remove(&q);
        }
        for q in ds.match_pattern(&QuadPattern::any().subject(m.clone()).predicate(link.clone()).object(node.clone())) {
            ds.remove(&q);
        }
        if let Some(i) = wanted {
            ds.add(m.clone(), link.clone(), node.clone(), &g)?;
            ds.add(node.clone(), Term::iri(vocab::rdf::TYPE), Term::iri(time::INTERVAL), &g)?;
            ds.add(node.clone(), Term::iri(time::HAS_BEGINNING), i.begin().to_term(), &g)?;
            ds.add(node, Term::iri(time::HAS_END), i.end().to_term(), &g)?;
        }
        report.updated += 1;
    }
    Ok(report)
}
