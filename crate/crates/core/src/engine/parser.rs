//! Reader for the rule language: s-expressions, `;` comments, strings with
//! `\"` and `\\` escapes, integers, symbols and `?var` variables.

use super::{Atom, Deffacts, EngineError, Pattern, Rule, RuleAction, SlotPattern, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(Atom, Pos),
    Var(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Var(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn symbol(&self) -> Option<&str> {
        match self {
            Sexp::Atom(Atom::Symbol(s), _) => Some(s),
            _ => None,
        }
    }
}

fn parse_error(pos: Pos, message: impl Into<String>) -> EngineError {
    EngineError::Parse {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Reader<'a> {
    fn new(source: &'a str) -> Self {
        Reader {
            chars: source.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read_all(&mut self) -> Result<Vec<Sexp>, EngineError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            if self.chars.peek().is_none() {
                return Ok(out);
            }
            out.push(self.read()?);
        }
    }

    fn read(&mut self) -> Result<Sexp, EngineError> {
        self.skip_trivia();
        let start = self.pos();
        match self.chars.peek().copied() {
            None => Err(parse_error(start, "unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(parse_error(self.pos(), "unclosed parenthesis")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(parse_error(start, "unexpected `)`")),
            Some('"') => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(parse_error(start, "unterminated string")),
                        Some('"') => return Ok(Sexp::Atom(Atom::Str(text), start)),
                        Some('\\') => match self.bump() {
                            Some(c @ ('"' | '\\')) => text.push(c),
                            Some('n') => text.push('\n'),
                            _ => return Err(parse_error(self.pos(), "bad escape in string")),
                        },
                        Some(c) => text.push(c),
                    }
                }
            }
            Some(_) => {
                let mut word = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    word.push(c);
                    self.bump();
                }
                if let Some(var) = word.strip_prefix('?') {
                    if !var.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_') {
                        return Err(parse_error(start, format!("bad variable name `{word}`")));
                    }
                    return Ok(Sexp::Var(var.to_string(), start));
                }
                if let Ok(n) = word.parse::<i64>() {
                    return Ok(Sexp::Atom(Atom::Int(n), start));
                }
                Ok(Sexp::Atom(Atom::Symbol(word), start))
            }
        }
    }
}

pub fn read_all(source: &str) -> Result<Vec<Sexp>, EngineError> {
    Reader::new(source).read_all()
}

/// Reads exactly one form; trailing input is an error.
pub fn read_one(source: &str) -> Result<Sexp, EngineError> {
    let mut forms = read_all(source)?;
    match forms.len() {
        1 => Ok(forms.pop().unwrap()),
        0 => Err(parse_error(Pos { line: 1, column: 1 }, "empty input")),
        _ => Err(parse_error(forms[1].pos(), "expected a single form")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construct {
    Rule(Rule),
    Deffacts(Deffacts),
}

pub fn is_construct(form: &Sexp) -> bool {
    matches!(form, Sexp::List(items, _)
        if matches!(items.first().and_then(Sexp::symbol), Some("defrule" | "deffacts")))
}

pub fn parse_program(source: &str) -> Result<Vec<Construct>, EngineError> {
    read_all(source)?.iter().map(parse_construct).collect()
}

pub fn parse_construct(form: &Sexp) -> Result<Construct, EngineError> {
    let Sexp::List(items, pos) = form else {
        return Err(parse_error(form.pos(), "expected a construct"));
    };
    match items.first().and_then(Sexp::symbol) {
        Some("defrule") => parse_rule(&items[1..], *pos).map(Construct::Rule),
        Some("deffacts") => parse_deffacts(&items[1..], *pos).map(Construct::Deffacts),
        _ => Err(parse_error(*pos, "expected `defrule` or `deffacts`")),
    }
}

fn construct_name(items: &[Sexp], pos: Pos, what: &str) -> Result<String, EngineError> {
    items
        .first()
        .and_then(Sexp::symbol)
        .map(str::to_string)
        .ok_or_else(|| parse_error(pos, format!("{what} needs a symbol name")))
}

fn parse_deffacts(items: &[Sexp], pos: Pos) -> Result<Deffacts, EngineError> {
    let name = construct_name(items, pos, "deffacts")?;
    let mut rest = &items[1..];
    if let Some(Sexp::Atom(Atom::Str(_), _)) = rest.first() {
        rest = &rest[1..];
    }
    let facts = rest.iter().map(parse_fact).collect::<Result<_, _>>()?;
    Ok(Deffacts { name, facts })
}

/// Parses a ground fact form `(head atom...)`.
pub fn parse_fact(form: &Sexp) -> Result<(String, Vec<Atom>), EngineError> {
    let Sexp::List(items, pos) = form else {
        return Err(parse_error(form.pos(), "expected a fact `(head ...)`"));
    };
    let head = items
        .first()
        .and_then(Sexp::symbol)
        .ok_or_else(|| parse_error(*pos, "fact head must be a symbol"))?;
    let slots = items[1..]
        .iter()
        .map(|s| match s {
            Sexp::Atom(a, _) => Ok(a.clone()),
            other => Err(parse_error(other.pos(), "fact slots must be atoms")),
        })
        .collect::<Result<_, _>>()?;
    Ok((head.to_string(), slots))
}

fn parse_rule(items: &[Sexp], pos: Pos) -> Result<Rule, EngineError> {
    let name = construct_name(items, pos, "defrule")?;
    let mut rest = &items[1..];
    if let Some(Sexp::Atom(Atom::Str(_), _)) = rest.first() {
        rest = &rest[1..];
    }
    let mut salience = 0;
    if let Some(Sexp::List(decl, dpos)) = rest.first() {
        if decl.first().and_then(Sexp::symbol) == Some("declare") {
            salience = parse_declare(&decl[1..], *dpos)?;
            rest = &rest[1..];
        }
    }
    let arrow = rest
        .iter()
        .position(|s| s.symbol() == Some("=>"))
        .ok_or_else(|| parse_error(pos, format!("rule `{name}` has no `=>`")))?;

    let mut patterns = Vec::new();
    let mut lhs = rest[..arrow].iter();
    while let Some(item) = lhs.next() {
        match item {
            Sexp::Var(var, vpos) => {
                match lhs.next() {
                    Some(arrow) if arrow.symbol() == Some("<-") => {}
                    _ => return Err(parse_error(*vpos, "expected `<-` after fact-address variable")),
                }
                let target = lhs
                    .next()
                    .ok_or_else(|| parse_error(*vpos, "expected a pattern after `<-`"))?;
                let mut pattern = parse_pattern(target)?;
                pattern.binding = Some(var.clone());
                patterns.push(pattern);
            }
            other => patterns.push(parse_pattern(other)?),
        }
    }
    if patterns.is_empty() {
        return Err(parse_error(pos, format!("rule `{name}` needs at least one pattern")));
    }

    let actions = rest[arrow + 1..]
        .iter()
        .map(parse_action)
        .collect::<Result<Vec<_>, _>>()?;

    let rule = Rule {
        name,
        salience,
        patterns,
        actions,
    };
    check_rule_variables(&rule, pos)?;
    Ok(rule)
}

fn parse_declare(items: &[Sexp], pos: Pos) -> Result<i64, EngineError> {
    match items {
        [Sexp::List(inner, ipos)] => match inner.as_slice() {
            [key, Sexp::Atom(Atom::Int(n), _)] if key.symbol() == Some("salience") => Ok(*n),
            _ => Err(parse_error(*ipos, "expected `(salience <integer>)`")),
        },
        _ => Err(parse_error(pos, "expected `(declare (salience <integer>))`")),
    }
}

fn parse_pattern(form: &Sexp) -> Result<Pattern, EngineError> {
    let Sexp::List(items, pos) = form else {
        return Err(parse_error(form.pos(), "expected a pattern `(head ...)`"));
    };
    let head = items
        .first()
        .and_then(Sexp::symbol)
        .ok_or_else(|| parse_error(*pos, "pattern head must be a symbol"))?;
    let slots = items[1..]
        .iter()
        .map(|s| match s {
            Sexp::Atom(a, _) => Ok(SlotPattern::Literal(a.clone())),
            Sexp::Var(v, _) if v.is_empty() => Ok(SlotPattern::Wildcard),
            Sexp::Var(v, _) => Ok(SlotPattern::Var(v.clone())),
            Sexp::List(_, p) => Err(parse_error(*p, "nested patterns are not supported")),
        })
        .collect::<Result<_, _>>()?;
    Ok(Pattern {
        binding: None,
        head: head.to_string(),
        slots,
    })
}

fn parse_term(form: &Sexp) -> Result<Term, EngineError> {
    match form {
        Sexp::Atom(a, _) => Ok(Term::Literal(a.clone())),
        Sexp::Var(v, p) if v.is_empty() => Err(parse_error(*p, "`?` cannot be used in actions")),
        Sexp::Var(v, _) => Ok(Term::Var(v.clone())),
        Sexp::List(_, p) => Err(parse_error(*p, "function calls are not supported in actions")),
    }
}

fn parse_action(form: &Sexp) -> Result<RuleAction, EngineError> {
    let Sexp::List(items, pos) = form else {
        return Err(parse_error(form.pos(), "expected an action"));
    };
    match items.first().and_then(Sexp::symbol) {
        Some("assert") => {
            let [Sexp::List(fact, fpos)] = &items[1..] else {
                return Err(parse_error(*pos, "`assert` in a rule takes exactly one fact"));
            };
            let head = fact
                .first()
                .and_then(Sexp::symbol)
                .ok_or_else(|| parse_error(*fpos, "fact head must be a symbol"))?;
            let terms = fact[1..].iter().map(parse_term).collect::<Result<_, _>>()?;
            Ok(RuleAction::Assert {
                head: head.to_string(),
                terms,
            })
        }
        Some("retract") => {
            if items.len() < 2 {
                return Err(parse_error(*pos, "`retract` needs at least one fact"));
            }
            let terms = items[1..].iter().map(parse_term).collect::<Result<_, _>>()?;
            Ok(RuleAction::Retract(terms))
        }
        Some("printout") => {
            if items.get(1).and_then(Sexp::symbol) != Some("t") {
                return Err(parse_error(*pos, "`printout` supports only the `t` router"));
            }
            let terms = items[2..].iter().map(parse_term).collect::<Result<_, _>>()?;
            Ok(RuleAction::Printout(terms))
        }
        _ => Err(parse_error(*pos, "unknown action (expected assert, retract or printout)")),
    }
}

fn check_rule_variables(rule: &Rule, pos: Pos) -> Result<(), EngineError> {
    let mut slot_vars = Vec::new();
    let mut address_vars = Vec::new();
    for pattern in &rule.patterns {
        if let Some(b) = &pattern.binding {
            address_vars.push(b.as_str());
        }
        for slot in &pattern.slots {
            if let SlotPattern::Var(v) = slot {
                slot_vars.push(v.as_str());
            }
        }
    }
    if let Some(clash) = address_vars.iter().find(|v| slot_vars.contains(v)) {
        return Err(parse_error(
            pos,
            format!("variable ?{clash} used both as fact address and slot value"),
        ));
    }
    for action in &rule.actions {
        let (terms, allow_address) = match action {
            RuleAction::Assert { terms, .. } => (terms, false),
            RuleAction::Retract(terms) => (terms, true),
            RuleAction::Printout(terms) => (terms, false),
        };
        for term in terms {
            match term {
                Term::Var(v) if slot_vars.contains(&v.as_str()) && !allow_address => {}
                Term::Var(v) if address_vars.contains(&v.as_str()) && allow_address => {}
                Term::Var(v) => {
                    return Err(parse_error(
                        pos,
                        format!("variable ?{v} in rule `{}` is not bound for this use", rule.name),
                    ))
                }
                Term::Literal(Atom::Int(_)) if allow_address => {}
                Term::Literal(_) if allow_address => {
                    return Err(parse_error(pos, "`retract` takes fact addresses or indices"))
                }
                Term::Literal(_) => {}
            }
        }
    }
    Ok(())
}
