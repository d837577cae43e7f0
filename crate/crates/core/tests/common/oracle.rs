//! Naive forward-chaining oracle with its own program model. It renders
//! source text for the engine under test but never calls into it.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Int(i64),
    Sym(String),
}

impl Val {
    fn render(&self) -> String {
        match self {
            Val::Int(n) => n.to_string(),
            Val::Sym(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Slot {
    Lit(Val),
    Var(String),
    Any,
}

#[derive(Debug, Clone)]
pub struct Pat {
    pub address: Option<String>,
    pub head: String,
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone)]
pub enum Arg {
    Lit(Val),
    Var(String),
}

#[derive(Debug, Clone)]
pub enum Act {
    Assert(String, Vec<Arg>),
    Retract(String),
    Print(Vec<Arg>),
}

#[derive(Debug, Clone)]
pub struct RuleDef {
    pub name: String,
    pub salience: i64,
    pub lhs: Vec<Pat>,
    pub rhs: Vec<Act>,
}

pub type FactBody = (String, Vec<Val>);

#[derive(Debug, Clone)]
pub struct Program {
    pub rules: Vec<RuleDef>,
    pub facts: Vec<FactBody>,
}

fn render_args(out: &mut String, args: &[Arg]) {
    for a in args {
        match a {
            Arg::Lit(v) => {
                let _ = write!(out, " {}", v.render());
            }
            Arg::Var(v) => {
                let _ = write!(out, " ?{v}");
            }
        }
    }
}

pub fn render_rule(rule: &RuleDef) -> String {
    let mut out = format!("(defrule {}", rule.name);
    if rule.salience != 0 {
        let _ = write!(out, " (declare (salience {}))", rule.salience);
    }
    for p in &rule.lhs {
        out.push(' ');
        if let Some(a) = &p.address {
            let _ = write!(out, "?{a} <- ");
        }
        let _ = write!(out, "({}", p.head);
        for s in &p.slots {
            match s {
                Slot::Lit(v) => {
                    let _ = write!(out, " {}", v.render());
                }
                Slot::Var(v) => {
                    let _ = write!(out, " ?{v}");
                }
                Slot::Any => out.push_str(" ?"),
            }
        }
        out.push(')');
    }
    out.push_str(" =>");
    for act in &rule.rhs {
        match act {
            Act::Assert(head, args) => {
                let _ = write!(out, " (assert ({head}");
                render_args(&mut out, args);
                out.push_str("))");
            }
            Act::Retract(v) => {
                let _ = write!(out, " (retract ?{v})");
            }
            Act::Print(args) => {
                out.push_str(" (printout t");
                render_args(&mut out, args);
                out.push_str(" crlf)");
            }
        }
    }
    out.push(')');
    out
}

pub fn render_fact(fact: &FactBody) -> String {
    let mut out = format!("({}", fact.0);
    for v in &fact.1 {
        let _ = write!(out, " {}", v.render());
    }
    out.push(')');
    out
}

pub fn render_facts(facts: &[FactBody]) -> String {
    facts.iter().map(render_fact).collect::<Vec<_>>().join(" ")
}

pub fn render_rules(rules: &[RuleDef]) -> String {
    rules.iter().map(render_rule).collect::<Vec<_>>().join("\n")
}

/// Naive forward chainer: every cycle recomputes all matches from scratch,
/// removes already-fired (rule, tuple) pairs and fires the best one.
#[derive(Debug, Clone, Default)]
pub struct NaiveEngine {
    pub rules: Vec<RuleDef>,
    pub facts: BTreeMap<usize, FactBody>,
    pub next_index: usize,
    fired: HashSet<(String, Vec<usize>)>,
    pub output: String,
}

#[derive(Default, Clone)]
struct Env {
    values: BTreeMap<String, Val>,
    addresses: BTreeMap<String, usize>,
}

impl NaiveEngine {
    pub fn new(rules: Vec<RuleDef>) -> Self {
        NaiveEngine {
            rules,
            ..Default::default()
        }
    }

    pub fn assert(&mut self, fact: FactBody) -> Option<usize> {
        if self.facts.values().any(|f| *f == fact) {
            return None;
        }
        let idx = self.next_index;
        self.next_index += 1;
        self.facts.insert(idx, fact);
        Some(idx)
    }

    pub fn retract(&mut self, idx: usize) {
        if self.facts.remove(&idx).is_some() {
            self.fired.retain(|(_, t)| !t.contains(&idx));
        }
    }

    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (i, f) in &self.facts {
            let _ = writeln!(out, "f-{i} {}", render_fact(f));
        }
        out
    }

    fn match_slot(slot: &Slot, val: &Val, env: &mut Env) -> bool {
        match slot {
            Slot::Any => true,
            Slot::Lit(v) => v == val,
            Slot::Var(name) => match env.values.get(name) {
                Some(bound) => bound == val,
                None => {
                    env.values.insert(name.clone(), val.clone());
                    true
                }
            },
        }
    }

    fn matches(&self, rule: &RuleDef) -> Vec<(Vec<usize>, Env)> {
        let mut partial: Vec<(Vec<usize>, Env)> = vec![(Vec::new(), Env::default())];
        for pat in &rule.lhs {
            let mut next = Vec::new();
            for (tuple, env) in &partial {
                for (idx, (head, vals)) in &self.facts {
                    if *head != pat.head || vals.len() != pat.slots.len() {
                        continue;
                    }
                    let mut env = env.clone();
                    if pat
                        .slots
                        .iter()
                        .zip(vals)
                        .all(|(s, v)| Self::match_slot(s, v, &mut env))
                    {
                        if let Some(a) = &pat.address {
                            env.addresses.insert(a.clone(), *idx);
                        }
                        let mut t = tuple.clone();
                        t.push(*idx);
                        next.push((t, env));
                    }
                }
            }
            partial = next;
        }
        partial
    }

    /// True when activation `a` should fire before `b`.
    fn precedes(a: (&RuleDef, &[usize]), b: (&RuleDef, &[usize])) -> bool {
        if a.0.salience != b.0.salience {
            return a.0.salience > b.0.salience;
        }
        let mut ra = a.1.to_vec();
        let mut rb = b.1.to_vec();
        ra.sort_unstable_by(|x, y| y.cmp(x));
        rb.sort_unstable_by(|x, y| y.cmp(x));
        if ra != rb {
            return ra > rb;
        }
        if a.0.name != b.0.name {
            return a.0.name < b.0.name;
        }
        a.1 > b.1
    }

    fn resolve(arg: &Arg, env: &Env) -> Val {
        match arg {
            Arg::Lit(v) => v.clone(),
            Arg::Var(v) => env.values[v].clone(),
        }
    }

    /// Fires one activation; false when nothing is eligible.
    pub fn step(&mut self) -> bool {
        let mut best: Option<(usize, Vec<usize>, Env)> = None;
        for (ri, rule) in self.rules.iter().enumerate() {
            for (tuple, env) in self.matches(rule) {
                if self.fired.contains(&(rule.name.clone(), tuple.clone())) {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((bi, bt, _)) => Self::precedes((rule, &tuple), (&self.rules[*bi], bt)),
                };
                if better {
                    best = Some((ri, tuple, env));
                }
            }
        }
        let Some((ri, tuple, env)) = best else {
            return false;
        };
        let rule = self.rules[ri].clone();
        self.fired.insert((rule.name.clone(), tuple));
        for act in &rule.rhs {
            match act {
                Act::Assert(head, args) => {
                    let vals = args.iter().map(|a| Self::resolve(a, &env)).collect();
                    self.assert((head.clone(), vals));
                }
                Act::Retract(v) => self.retract(env.addresses[v]),
                Act::Print(args) => {
                    for a in args {
                        self.output.push_str(&Self::resolve(a, &env).render());
                    }
                    self.output.push('\n');
                }
            }
        }
        true
    }

    pub fn run(&mut self, limit: usize) -> usize {
        let mut n = 0;
        while n < limit && self.step() {
            n += 1;
        }
        n
    }
}

/// Plain backtracking that branches on the empty cell with the fewest legal
/// digits, found by rescanning the grid. Returns up to `limit` solutions.
pub fn brute_force_sudoku(grid: &str, limit: usize) -> Vec<String> {
    let mut cells: Vec<u8> = grid
        .chars()
        .map(|c| if c == '.' || c == '0' { 0 } else { c.to_digit(10).unwrap() as u8 })
        .collect();
    assert_eq!(cells.len(), 81);
    fn ok(cells: &[u8], pos: usize, d: u8) -> bool {
        let (r, c) = (pos / 9, pos % 9);
        for k in 0..9 {
            if (k != c && cells[r * 9 + k] == d) || (k != r && cells[k * 9 + c] == d) {
                return false;
            }
        }
        let (br, bc) = (r / 3 * 3, c / 3 * 3);
        for rr in br..br + 3 {
            for cc in bc..bc + 3 {
                if (rr, cc) != (r, c) && cells[rr * 9 + cc] == d {
                    return false;
                }
            }
        }
        true
    }
    fn go(cells: &mut Vec<u8>, out: &mut Vec<String>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        let mut best: Option<(usize, Vec<u8>)> = None;
        for pos in (0..81).filter(|&p| cells[p] == 0) {
            let digits: Vec<u8> = (1..=9).filter(|&d| ok(cells, pos, d)).collect();
            if best.as_ref().map_or(true, |(_, b)| digits.len() < b.len()) {
                best = Some((pos, digits));
            }
        }
        let Some((pos, digits)) = best else {
            out.push(cells.iter().map(|d| (b'0' + d) as char).collect());
            return;
        };
        for d in digits {
            cells[pos] = d;
            go(cells, out, limit);
            cells[pos] = 0;
        }
    }
    for (i, &d) in cells.iter().enumerate() {
        if d != 0 && !ok(&cells, i, d) {
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    go(&mut cells, &mut out, limit);
    out
}

pub fn is_valid_solution(puzzle: &str, solution: &str) -> bool {
    let p: Vec<char> = puzzle.chars().collect();
    let s: Vec<u8> = solution.bytes().collect();
    if s.len() != 81 || s.iter().any(|b| !(b'1'..=b'9').contains(b)) {
        return false;
    }
    for i in 0..81 {
        if p[i] != '.' && p[i] != '0' && p[i] as u8 != s[i] {
            return false;
        }
    }
    let groups = (0..9).flat_map(|k| {
        [
            (0..9).map(|j| k * 9 + j).collect::<Vec<_>>(),
            (0..9).map(|j| j * 9 + k).collect(),
            (0..9).map(|j| (k / 3 * 3 + j / 3) * 9 + k % 3 * 3 + j % 3).collect(),
        ]
    });
    groups.into_iter().all(|g| {
        let set: HashSet<u8> = g.iter().map(|&i| s[i]).collect();
        set.len() == 9
    })
}

const HEADS: [(&str, usize); 3] = [("a", 1), ("b", 1), ("c", 2)];
const VAR_NAMES: [&str; 3] = ["x", "y", "z"];

fn random_val<R: rand::Rng>(rng: &mut R) -> Val {
    match rng.random_range(0..5) {
        0 => Val::Sym("p".into()),
        1 => Val::Sym("q".into()),
        n => Val::Int(n - 2),
    }
}

pub fn random_fact<R: rand::Rng>(rng: &mut R) -> FactBody {
    let (head, arity) = HEADS[rng.random_range(0..HEADS.len())];
    (head.to_string(), (0..arity).map(|_| random_val(rng)).collect())
}

/// Up to `max_rules` rules of one or two patterns and up to `max_facts`
/// initial facts over a tiny vocabulary, so that rules actually match.
pub fn random_program<R: rand::Rng>(rng: &mut R, max_rules: usize, max_facts: usize) -> Program {
    let n_rules = rng.random_range(1..=max_rules);
    let mut rules = Vec::new();
    for r in 0..n_rules {
        let mut lhs = Vec::new();
        let mut bound: Vec<String> = Vec::new();
        let mut addresses = Vec::new();
        for p in 0..rng.random_range(1..=2) {
            let (head, arity) = HEADS[rng.random_range(0..HEADS.len())];
            let slots = (0..arity)
                .map(|_| match rng.random_range(0..4) {
                    0 => Slot::Lit(random_val(rng)),
                    1 => Slot::Any,
                    _ => {
                        let v = VAR_NAMES[rng.random_range(0..VAR_NAMES.len())].to_string();
                        if !bound.contains(&v) {
                            bound.push(v.clone());
                        }
                        Slot::Var(v)
                    }
                })
                .collect();
            let address = rng.random_bool(0.4).then(|| format!("f{p}"));
            if let Some(a) = &address {
                addresses.push(a.clone());
            }
            lhs.push(Pat {
                address,
                head: head.to_string(),
                slots,
            });
        }
        let arg = |rng: &mut R| {
            if !bound.is_empty() && rng.random_bool(0.6) {
                Arg::Var(bound[rng.random_range(0..bound.len())].clone())
            } else {
                Arg::Lit(random_val(rng))
            }
        };
        let mut rhs = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            match rng.random_range(0..4) {
                0 if !addresses.is_empty() => {
                    rhs.push(Act::Retract(addresses[rng.random_range(0..addresses.len())].clone()))
                }
                1 => {
                    let args = (0..rng.random_range(1..=2)).map(|_| arg(rng)).collect();
                    rhs.push(Act::Print(args));
                }
                _ => {
                    let (head, arity) = HEADS[rng.random_range(0..HEADS.len())];
                    let args = (0..arity).map(|_| arg(rng)).collect();
                    rhs.push(Act::Assert(head.to_string(), args));
                }
            }
        }
        rules.push(RuleDef {
            name: format!("r{r}"),
            salience: rng.random_range(-1..=1),
            lhs,
            rhs,
        });
    }
    let facts = (0..rng.random_range(0..=max_facts)).map(|_| random_fact(rng)).collect();
    Program { rules, facts }
}

pub fn render_deffacts(facts: &[FactBody]) -> String {
    if facts.is_empty() {
        String::new()
    } else {
        format!("(deffacts init {})", render_facts(facts))
    }
}
