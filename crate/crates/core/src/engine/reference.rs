use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::time::Duration;

use super::parser::{self, Construct, Sexp};
use super::snapshot::{self, Snapshot, SnapshotFormat, SnapshotImage};
use super::{
    burn, sudoku, Atom, Deffacts, EngineError, Fact, Pattern, Rule, RuleAction, RuleEngine,
    RunLimit, SlotPattern, Term, WatchCategory,
};

/// Firings allowed for an unbounded run before it is cut off.
pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
enum Binding<'a> {
    Value(&'a Atom),
    Address(usize),
}

type Bindings<'a> = Vec<(&'a str, Binding<'a>)>;

fn lookup<'a>(bindings: &Bindings<'a>, name: &str) -> Option<Binding<'a>> {
    bindings.iter().find(|(n, _)| *n == name).map(|(_, b)| *b)
}

/// Agenda ordering: the smallest key fires first. Salience descending, then
/// recency (fact indices sorted newest first, compared lexicographically),
/// then rule name, then the tuple itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Activation {
    salience: Reverse<i64>,
    recency: Reverse<Vec<usize>>,
    rule: String,
    tuple: Reverse<Vec<usize>>,
}

impl Activation {
    fn new(rule: &Rule, tuple: Vec<usize>) -> Self {
        let mut recency = tuple.clone();
        recency.sort_unstable_by(|a, b| b.cmp(a));
        Activation {
            salience: Reverse(rule.salience),
            recency: Reverse(recency),
            rule: rule.name.clone(),
            tuple: Reverse(tuple),
        }
    }

    fn facts(&self) -> &[usize] {
        &self.tuple.0
    }

    fn describe(&self) -> String {
        let facts: Vec<String> = self.facts().iter().map(|i| format!("f-{i}")).collect();
        format!("{} {}: {}", self.salience.0, self.rule, facts.join(","))
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct WatchFlags {
    facts: bool,
    rules: bool,
    activations: bool,
}

/// The bundled forward-chaining engine.
///
/// Matching is incremental: asserting a fact only enumerates tuples that
/// contain it, and retracting a fact drops the activations that used it.
#[derive(Debug)]
pub struct ReferenceEngine {
    facts: BTreeMap<usize, Fact>,
    fact_keys: HashMap<(String, Vec<Atom>), usize>,
    next_index: usize,
    rules: Vec<Rule>,
    deffacts: Vec<Deffacts>,
    agenda: BTreeSet<Activation>,
    fired: HashSet<(String, Vec<usize>)>,
    firings: usize,
    watch: WatchFlags,
    input_buffer: String,
    cursor: usize,
    output: String,
    cycle_cap: usize,
}

impl Default for ReferenceEngine {
    fn default() -> Self {
        ReferenceEngine::new()
    }
}

impl ReferenceEngine {
    pub fn new() -> Self {
        ReferenceEngine {
            facts: BTreeMap::new(),
            fact_keys: HashMap::new(),
            next_index: 0,
            rules: Vec::new(),
            deffacts: Vec::new(),
            agenda: BTreeSet::new(),
            fired: HashSet::new(),
            firings: 0,
            watch: WatchFlags::default(),
            input_buffer: String::new(),
            cursor: 0,
            output: String::new(),
            cycle_cap: DEFAULT_CYCLE_CAP,
        }
    }

    pub fn with_cycle_cap(mut self, cap: usize) -> Self {
        self.cycle_cap = cap;
        self
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.values()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn next_fact_index(&self) -> usize {
        self.next_index
    }

    pub fn agenda_len(&self) -> usize {
        self.agenda.len()
    }

    pub fn facts_listing(&self) -> String {
        let mut out = String::new();
        for fact in self.facts.values() {
            let _ = writeln!(out, "{fact}");
        }
        out
    }

    pub fn rules_listing(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            let _ = writeln!(out, "{}", rule.name);
        }
        out
    }

    pub fn agenda_listing(&self) -> String {
        let mut out = String::new();
        for act in &self.agenda {
            let _ = writeln!(out, "{}", act.describe());
        }
        out
    }

    fn add_construct(&mut self, construct: Construct) -> Result<(), EngineError> {
        match construct {
            Construct::Rule(rule) => {
                if self.rules.iter().any(|r| r.name == rule.name) {
                    return Err(EngineError::DuplicateConstruct(format!("defrule {}", rule.name)));
                }
                let mut found = Vec::new();
                self.match_rule(&rule, None, &mut found);
                for tuple in found {
                    if !self.fired.contains(&(rule.name.clone(), tuple.clone())) {
                        self.add_activation(Activation::new(&rule, tuple));
                    }
                }
                self.rules.push(rule);
            }
            Construct::Deffacts(d) => {
                if self.deffacts.iter().any(|x| x.name == d.name) {
                    return Err(EngineError::DuplicateConstruct(format!("deffacts {}", d.name)));
                }
                self.deffacts.push(d);
            }
        }
        Ok(())
    }

    fn load_constructs(&mut self, constructs: Vec<Construct>) -> Result<usize, EngineError> {
        // Reject duplicates before touching the engine so a failed load is atomic.
        let mut rule_names: HashSet<&str> = self.rules.iter().map(|r| r.name.as_str()).collect();
        let mut deffacts_names: HashSet<&str> =
            self.deffacts.iter().map(|d| d.name.as_str()).collect();
        for c in &constructs {
            let fresh = match c {
                Construct::Rule(r) => rule_names.insert(&r.name),
                Construct::Deffacts(d) => deffacts_names.insert(&d.name),
            };
            if !fresh {
                let label = match c {
                    Construct::Rule(r) => format!("defrule {}", r.name),
                    Construct::Deffacts(d) => format!("deffacts {}", d.name),
                };
                return Err(EngineError::DuplicateConstruct(label));
            }
        }
        let count = constructs.len();
        for c in constructs {
            self.add_construct(c)?;
        }
        Ok(count)
    }

    fn add_activation(&mut self, act: Activation) {
        if self.watch.activations {
            let _ = writeln!(self.output, "==> Activation {}", act.describe());
        }
        self.agenda.insert(act);
    }

    /// Inserts a fact unless an identical one exists. Returns the new index.
    fn insert_fact(&mut self, head: String, slots: Vec<Atom>) -> Option<usize> {
        let key = (head, slots);
        if self.fact_keys.contains_key(&key) {
            return None;
        }
        let index = self.next_index;
        self.next_index += 1;
        self.fact_keys.insert(key.clone(), index);
        let fact = Fact {
            index,
            head: key.0,
            slots: key.1,
        };
        if self.watch.facts {
            let _ = writeln!(self.output, "==> {fact}");
        }
        self.facts.insert(index, fact);

        let mut found = Vec::new();
        for rule in &self.rules {
            let mut tuples = Vec::new();
            self.match_rule(rule, Some(index), &mut tuples);
            found.extend(tuples.into_iter().map(|t| Activation::new(rule, t)));
        }
        for act in found {
            self.add_activation(act);
        }
        Some(index)
    }

    fn remove_fact(&mut self, index: usize) -> Result<(), EngineError> {
        let fact = self.facts.remove(&index).ok_or(EngineError::NoSuchFact(index))?;
        self.fact_keys.remove(&(fact.head.clone(), fact.slots.clone()));
        if self.watch.facts {
            let _ = writeln!(self.output, "<== {fact}");
        }
        let dropped: Vec<Activation> = self
            .agenda
            .iter()
            .filter(|a| a.facts().contains(&index))
            .cloned()
            .collect();
        for act in dropped {
            if self.watch.activations {
                let _ = writeln!(self.output, "<== Activation {}", act.describe());
            }
            self.agenda.remove(&act);
        }
        self.fired.retain(|(_, tuple)| !tuple.contains(&index));
        Ok(())
    }

    /// Collects the fact tuples matching `rule`. With `required`, only tuples
    /// containing that fact are produced, each exactly once: positions before
    /// its first occurrence skip it.
    fn match_rule(&self, rule: &Rule, required: Option<usize>, out: &mut Vec<Vec<usize>>) {
        match required {
            None => {
                let mut tuple = Vec::with_capacity(rule.patterns.len());
                self.join(rule, 0, None, &mut Vec::new(), &mut tuple, out);
            }
            Some(idx) => {
                let fact = &self.facts[&idx];
                for first in 0..rule.patterns.len() {
                    let mut bindings = Vec::new();
                    if !match_pattern(&rule.patterns[first], fact, &mut bindings) {
                        continue;
                    }
                    let mut tuple = Vec::with_capacity(rule.patterns.len());
                    self.join_with_fixed(rule, 0, first, idx, &mut Vec::new(), &mut tuple, out);
                }
            }
        }
    }

    fn join<'a>(
        &'a self,
        rule: &'a Rule,
        position: usize,
        skip: Option<usize>,
        bindings: &mut Bindings<'a>,
        tuple: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if position == rule.patterns.len() {
            out.push(tuple.clone());
            return;
        }
        let pattern = &rule.patterns[position];
        for fact in self.facts.values() {
            if Some(fact.index) == skip {
                continue;
            }
            let mark = bindings.len();
            if match_pattern(pattern, fact, bindings) {
                tuple.push(fact.index);
                self.join(rule, position + 1, skip, bindings, tuple, out);
                tuple.pop();
            }
            bindings.truncate(mark);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn join_with_fixed<'a>(
        &'a self,
        rule: &'a Rule,
        position: usize,
        fixed_at: usize,
        fixed: usize,
        bindings: &mut Bindings<'a>,
        tuple: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if position == rule.patterns.len() {
            out.push(tuple.clone());
            return;
        }
        let pattern = &rule.patterns[position];
        let candidates: Box<dyn Iterator<Item = &Fact>> = if position == fixed_at {
            Box::new(std::iter::once(&self.facts[&fixed]))
        } else {
            Box::new(
                self.facts
                    .values()
                    .filter(move |f| position > fixed_at || f.index != fixed),
            )
        };
        for fact in candidates {
            let mark = bindings.len();
            if match_pattern(pattern, fact, bindings) {
                tuple.push(fact.index);
                self.join_with_fixed(rule, position + 1, fixed_at, fixed, bindings, tuple, out);
                tuple.pop();
            }
            bindings.truncate(mark);
        }
    }

    fn fire(&mut self, act: Activation) -> Result<(), EngineError> {
        self.firings += 1;
        let rule = self
            .rules
            .iter()
            .find(|r| r.name == act.rule)
            .cloned()
            .expect("agenda only references defined rules");
        if self.watch.rules {
            let facts: Vec<String> = act.facts().iter().map(|i| format!("f-{i}")).collect();
            let _ = writeln!(self.output, "FIRE {} {}: {}", self.firings, rule.name, facts.join(","));
        }
        self.fired.insert((rule.name.clone(), act.facts().to_vec()));

        // Resolve bindings against the facts as they were when matched.
        let mut values: HashMap<String, Atom> = HashMap::new();
        let mut addresses: HashMap<String, usize> = HashMap::new();
        {
            let mut bindings = Vec::new();
            for (pattern, idx) in rule.patterns.iter().zip(act.facts()) {
                let fact = &self.facts[idx];
                let ok = match_pattern(pattern, fact, &mut bindings);
                debug_assert!(ok, "activation no longer matches its facts");
            }
            for (name, b) in bindings {
                match b {
                    Binding::Value(a) => {
                        values.insert(name.to_string(), a.clone());
                    }
                    Binding::Address(i) => {
                        addresses.insert(name.to_string(), i);
                    }
                }
            }
        }

        for action in &rule.actions {
            match action {
                RuleAction::Assert { head, terms } => {
                    let slots = terms.iter().map(|t| resolve(t, &values)).collect();
                    self.insert_fact(head.clone(), slots);
                }
                RuleAction::Retract(terms) => {
                    for term in terms {
                        let idx = match term {
                            Term::Var(v) => addresses[v],
                            Term::Literal(Atom::Int(n)) if *n >= 0 => *n as usize,
                            Term::Literal(other) => {
                                return Err(EngineError::Eval(format!("cannot retract {other}")))
                            }
                        };
                        // Retracting an already-retracted fact is a no-op, as in CLIPS.
                        if self.facts.contains_key(&idx) {
                            self.remove_fact(idx)?;
                        }
                    }
                }
                RuleAction::Printout(terms) => {
                    for term in terms {
                        match term {
                            Term::Literal(Atom::Symbol(s)) if s == "crlf" => self.output.push('\n'),
                            Term::Literal(Atom::Str(s)) => self.output.push_str(s),
                            other => {
                                let atom = resolve(other, &values);
                                match atom {
                                    Atom::Str(s) => self.output.push_str(&s),
                                    a => {
                                        let _ = write!(self.output, "{a}");
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn parse_single_fact(source: &str) -> Result<(String, Vec<Atom>), EngineError> {
        parser::parse_fact(&parser::read_one(source)?)
    }

    fn eval_form(&mut self, form: &Sexp) -> Result<String, EngineError> {
        let Sexp::List(items, _) = form else {
            return Err(EngineError::UnknownCommand(format!("{form:?}")));
        };
        if parser::is_construct(form) {
            let construct = parser::parse_construct(form)?;
            self.load_constructs(vec![construct])?;
            return Ok(String::new());
        }
        let Some(Sexp::Atom(Atom::Symbol(name), _)) = items.first() else {
            return Err(EngineError::UnknownCommand("command must start with a symbol".into()));
        };
        let args = &items[1..];
        let no_args = |out: Result<String, EngineError>| {
            if args.is_empty() {
                out
            } else {
                Err(EngineError::Eval(format!("({name}) takes no arguments")))
            }
        };
        match name.as_str() {
            "facts" => no_args(Ok(self.facts_listing())),
            "rules" => no_args(Ok(self.rules_listing())),
            "agenda" => no_args(Ok(self.agenda_listing())),
            "reset" => no_args({
                self.reset();
                Ok(self.take_output())
            }),
            "clear" => no_args({
                self.clear();
                Ok(String::new())
            }),
            "run" => {
                let limit = match args {
                    [] => RunLimit::Unbounded,
                    [Sexp::Atom(Atom::Int(n), _)] if *n < 0 => RunLimit::Unbounded,
                    [Sexp::Atom(Atom::Int(n), _)] => RunLimit::Cycles(*n as usize),
                    _ => return Err(EngineError::Eval("(run [n]) takes an integer".into())),
                };
                self.run(limit)?;
                Ok(self.take_output())
            }
            "assert" => {
                if args.is_empty() {
                    return Err(EngineError::Eval("(assert) needs a fact".into()));
                }
                let mut out = String::new();
                for arg in args {
                    let (head, slots) = parser::parse_fact(arg)?;
                    match self.insert_fact(head, slots) {
                        Some(i) => out = format!("<Fact-{i}>"),
                        None => out = "FALSE".into(),
                    }
                }
                let mut text = self.take_output();
                text.push_str(&out);
                text.push('\n');
                Ok(text)
            }
            "retract" => {
                if args.is_empty() {
                    return Err(EngineError::Eval("(retract) needs a fact index".into()));
                }
                for arg in args {
                    let idx = match arg {
                        Sexp::Atom(Atom::Int(n), _) if *n >= 0 => *n as usize,
                        Sexp::Atom(Atom::Symbol(s), _) => s
                            .strip_prefix("f-")
                            .and_then(|n| n.parse().ok())
                            .ok_or_else(|| EngineError::Eval(format!("bad fact index `{s}`")))?,
                        other => return Err(EngineError::Eval(format!("bad fact index {other:?}"))),
                    };
                    self.remove_fact(idx)?;
                }
                Ok(self.take_output())
            }
            "watch" | "unwatch" => {
                let [Sexp::Atom(Atom::Symbol(cat), _)] = args else {
                    return Err(EngineError::Eval(format!("({name} <category>)")));
                };
                for c in WatchCategory::parse_list(cat)? {
                    self.set_watch(c, name == "watch");
                }
                Ok(String::new())
            }
            "solve-sudoku" => {
                let [Sexp::Atom(Atom::Str(grid) | Atom::Symbol(grid), _)] = args else {
                    return Err(EngineError::Eval("(solve-sudoku \"<81 chars>\")".into()));
                };
                let solved = sudoku::solve(grid)?;
                Ok(format!("{solved}\n"))
            }
            "burn" => {
                let [Sexp::Atom(Atom::Int(ms), _)] = args else {
                    return Err(EngineError::Eval("(burn <ms>)".into()));
                };
                if *ms < 0 {
                    return Err(EngineError::Eval("burn duration must be >= 0".into()));
                }
                let report = burn(Duration::from_millis(*ms as u64));
                Ok(format!(
                    "burned {} ms: {} iterations, digest {:016x}\n",
                    report.elapsed.as_millis(),
                    report.iterations,
                    report.digest
                ))
            }
            other => Err(EngineError::UnknownCommand(format!("({other})"))),
        }
    }

    fn image(&self) -> SnapshotImage {
        let mut fired: Vec<(String, Vec<usize>)> = self.fired.iter().cloned().collect();
        fired.sort();
        SnapshotImage {
            next_index: self.next_index,
            cursor: self.cursor,
            deffacts: self.deffacts.clone(),
            rules: self.rules.clone(),
            facts: self.facts.values().cloned().collect(),
            fired,
        }
    }

    fn from_image(image: SnapshotImage, cycle_cap: usize) -> Result<Self, EngineError> {
        let mut engine = ReferenceEngine::new().with_cycle_cap(cycle_cap);
        engine.deffacts = image.deffacts;
        engine.rules = image.rules;
        for fact in image.facts {
            if fact.index >= image.next_index || engine.facts.contains_key(&fact.index) {
                return Err(EngineError::Snapshot(format!("bad fact index f-{}", fact.index)));
            }
            let key = (fact.head.clone(), fact.slots.clone());
            if engine.fact_keys.insert(key, fact.index).is_some() {
                return Err(EngineError::Snapshot(format!("duplicate fact f-{}", fact.index)));
            }
            engine.facts.insert(fact.index, fact);
        }
        engine.next_index = image.next_index;
        engine.cursor = image.cursor;
        engine.fired = image.fired.into_iter().collect();
        engine.rebuild_agenda();
        Ok(engine)
    }

    fn rebuild_agenda(&mut self) {
        self.agenda.clear();
        let mut acts = Vec::new();
        for rule in &self.rules {
            let mut tuples = Vec::new();
            self.match_rule(rule, None, &mut tuples);
            for t in tuples {
                if !self.fired.contains(&(rule.name.clone(), t.clone())) {
                    acts.push(Activation::new(rule, t));
                }
            }
        }
        self.agenda.extend(acts);
    }
}

fn resolve(term: &Term, values: &HashMap<String, Atom>) -> Atom {
    match term {
        Term::Literal(a) => a.clone(),
        Term::Var(v) => values[v].clone(),
    }
}

fn match_pattern<'a>(pattern: &'a Pattern, fact: &'a Fact, bindings: &mut Bindings<'a>) -> bool {
    if pattern.head != fact.head || pattern.slots.len() != fact.slots.len() {
        return false;
    }
    let mark = bindings.len();
    for (slot, value) in pattern.slots.iter().zip(&fact.slots) {
        let ok = match slot {
            SlotPattern::Wildcard => true,
            SlotPattern::Literal(a) => a == value,
            SlotPattern::Var(v) => match lookup(bindings, v) {
                Some(Binding::Value(bound)) => bound == value,
                Some(Binding::Address(_)) => false,
                None => {
                    bindings.push((v.as_str(), Binding::Value(value)));
                    true
                }
            },
        };
        if !ok {
            bindings.truncate(mark);
            return false;
        }
    }
    if let Some(b) = &pattern.binding {
        bindings.push((b.as_str(), Binding::Address(fact.index)));
    }
    true
}

impl RuleEngine for ReferenceEngine {
    fn load_program(&mut self, source: &str) -> Result<usize, EngineError> {
        let constructs = parser::parse_program(source)?;
        self.load_constructs(constructs)
    }

    fn build(&mut self, construct: &str) -> Result<(), EngineError> {
        let form = parser::read_one(construct)?;
        let construct = parser::parse_construct(&form)?;
        self.load_constructs(vec![construct]).map(|_| ())
    }

    fn assert_facts(&mut self, source: &str) -> Result<usize, EngineError> {
        let facts = parser::read_all(source)?
            .iter()
            .map(parser::parse_fact)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(facts
            .into_iter()
            .filter_map(|(h, s)| self.insert_fact(h, s))
            .count())
    }

    fn assert_string(&mut self, fact: &str) -> Result<Option<usize>, EngineError> {
        let (head, slots) = Self::parse_single_fact(fact)?;
        Ok(self.insert_fact(head, slots))
    }

    fn eval(&mut self, command: &str) -> Result<String, EngineError> {
        let form = parser::read_one(command)?;
        let mut out = self.take_output();
        out.push_str(&self.eval_form(&form)?);
        Ok(out)
    }

    fn run(&mut self, limit: RunLimit) -> Result<usize, EngineError> {
        let budget = match limit {
            RunLimit::Cycles(n) => n,
            RunLimit::Unbounded => self.cycle_cap,
        };
        let mut fired = 0;
        while fired < budget {
            let Some(act) = self.agenda.pop_first() else {
                return Ok(fired);
            };
            self.fire(act)?;
            fired += 1;
        }
        if limit == RunLimit::Unbounded && !self.agenda.is_empty() {
            return Err(EngineError::CycleCapExceeded { fired });
        }
        Ok(fired)
    }

    fn reset(&mut self) {
        self.facts.clear();
        self.fact_keys.clear();
        self.agenda.clear();
        self.fired.clear();
        self.next_index = 0;
        self.cursor = 0;
        let templates: Vec<(String, Vec<Atom>)> = self
            .deffacts
            .iter()
            .flat_map(|d| d.facts.iter().cloned())
            .collect();
        for (head, slots) in templates {
            self.insert_fact(head, slots);
        }
    }

    fn clear(&mut self) {
        let watch = self.watch;
        let cap = self.cycle_cap;
        let input = std::mem::take(&mut self.input_buffer);
        *self = ReferenceEngine::new().with_cycle_cap(cap);
        self.watch = watch;
        self.input_buffer = input;
    }

    fn snapshot(&self, format: SnapshotFormat) -> Snapshot {
        snapshot::encode(&self.image(), format)
    }

    fn restore(&mut self, snap: &Snapshot) -> Result<(), EngineError> {
        let image = snapshot::decode(snap)?;
        let mut restored = ReferenceEngine::from_image(image, self.cycle_cap)?;
        restored.watch = self.watch;
        restored.input_buffer = std::mem::take(&mut self.input_buffer);
        *self = restored;
        Ok(())
    }

    fn fact_slot(&self, fact_index: usize, position: usize) -> Result<Atom, EngineError> {
        let fact = self
            .facts
            .get(&fact_index)
            .ok_or(EngineError::NoSuchFact(fact_index))?;
        if position == 0 {
            return Ok(Atom::Symbol(fact.head.clone()));
        }
        fact.slots
            .get(position - 1)
            .cloned()
            .ok_or(EngineError::NoSuchSlot {
                fact: fact_index,
                position,
            })
    }

    fn move_cursor(&mut self, delta: i64) -> Result<usize, EngineError> {
        if self.facts.is_empty() {
            return Err(EngineError::Eval("NO_SUCH_FACT: fact list is empty".into()));
        }
        let last = self.facts.len() as i64 - 1;
        let current = (self.cursor as i64).min(last);
        self.cursor = current.saturating_add(delta).clamp(0, last) as usize;
        Ok(*self.facts.keys().nth(self.cursor).expect("cursor within bounds"))
    }

    fn set_watch(&mut self, category: WatchCategory, enabled: bool) {
        match category {
            WatchCategory::Facts => self.watch.facts = enabled,
            WatchCategory::Rules => self.watch.rules = enabled,
            WatchCategory::Activations => self.watch.activations = enabled,
        }
    }

    fn input_buffer(&self) -> &str {
        &self.input_buffer
    }

    fn append_input_buffer(&mut self, text: &str) {
        self.input_buffer.push_str(text);
    }

    fn take_output(&mut self) -> String {
        std::mem::take(&mut self.output)
    }
}
