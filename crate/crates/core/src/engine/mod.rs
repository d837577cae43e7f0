//! The engine side of the action vocabulary.
//!
//! Agents talk to their engine only through [`RuleEngine`], so another
//! production system can be plugged in behind the same calls. The crate ships
//! [`ReferenceEngine`], a small forward-chaining engine over ordered facts with
//! a CLIPS-flavored syntax:
//!
//! ```text
//! (deffacts start (light red))
//! (defrule stop (declare (salience 5)) ?l <- (light red) => (retract ?l) (assert (car stopped)))
//! ```

use std::fmt;

mod burn;
pub mod parser;
mod reference;
pub mod snapshot;
pub mod sudoku;

pub use burn::{burn, burn_digest, BurnReport};
pub use reference::{ReferenceEngine, DEFAULT_CYCLE_CAP};
pub use snapshot::{Snapshot, SnapshotFormat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("PARSE_ERROR at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("DUPLICATE_CONSTRUCT: {0}")]
    DuplicateConstruct(String),
    #[error("UNKNOWN_COMMAND: {0}")]
    UnknownCommand(String),
    #[error("EVAL_ERROR: {0}")]
    Eval(String),
    #[error("CYCLE_CAP_EXCEEDED: stopped after {fired} firings")]
    CycleCapExceeded { fired: usize },
    #[error("SNAPSHOT_ERROR: {0}")]
    Snapshot(String),
    #[error("NO_SUCH_FACT: f-{0}")]
    NoSuchFact(usize),
    #[error("NO_SUCH_SLOT: f-{fact} has no slot {position}")]
    NoSuchSlot { fact: usize, position: usize },
    #[error("NO_SOLUTION: {0}")]
    NoSolution(String),
    #[error("IO_ERROR: {0}")]
    Io(String),
}

impl EngineError {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::Parse { .. } => "PARSE_ERROR",
            EngineError::DuplicateConstruct(_) => "DUPLICATE_CONSTRUCT",
            EngineError::UnknownCommand(_) => "UNKNOWN_COMMAND",
            EngineError::Eval(_) => "EVAL_ERROR",
            EngineError::CycleCapExceeded { .. } => "CYCLE_CAP_EXCEEDED",
            EngineError::Snapshot(_) => "SNAPSHOT_ERROR",
            EngineError::NoSuchFact(_) => "NO_SUCH_FACT",
            EngineError::NoSuchSlot { .. } => "NO_SUCH_SLOT",
            EngineError::NoSolution(_) => "NO_SOLUTION",
            EngineError::Io(_) => "IO_ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Symbol(String),
    Int(i64),
    Str(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbol(s) => f.write_str(s),
            Atom::Int(n) => write!(f, "{n}"),
            Atom::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub index: usize,
    pub head: String,
    pub slots: Vec<Atom>,
}

impl Fact {
    pub fn body(&self) -> String {
        let mut out = format!("({}", self.head);
        for slot in &self.slots {
            out.push(' ');
            out.push_str(&slot.to_string());
        }
        out.push(')');
        out
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f-{} {}", self.index, self.body())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotPattern {
    Literal(Atom),
    Var(String),
    Wildcard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    /// `?f <- (...)` fact-address binding.
    pub binding: Option<String>,
    pub head: String,
    pub slots: Vec<SlotPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Literal(Atom),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleAction {
    Assert { head: String, terms: Vec<Term> },
    Retract(Vec<Term>),
    Printout(Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub salience: i64,
    pub patterns: Vec<Pattern>,
    pub actions: Vec<RuleAction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deffacts {
    pub name: String,
    pub facts: Vec<(String, Vec<Atom>)>,
}

fn write_term(f: &mut fmt::Formatter<'_>, term: &Term) -> fmt::Result {
    match term {
        Term::Literal(a) => write!(f, "{a}"),
        Term::Var(v) => write!(f, "?{v}"),
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(defrule {}", self.name)?;
        if self.salience != 0 {
            write!(f, " (declare (salience {}))", self.salience)?;
        }
        for pattern in &self.patterns {
            f.write_str(" ")?;
            if let Some(b) = &pattern.binding {
                write!(f, "?{b} <- ")?;
            }
            write!(f, "({}", pattern.head)?;
            for slot in &pattern.slots {
                match slot {
                    SlotPattern::Literal(a) => write!(f, " {a}")?,
                    SlotPattern::Var(v) => write!(f, " ?{v}")?,
                    SlotPattern::Wildcard => f.write_str(" ?")?,
                }
            }
            f.write_str(")")?;
        }
        f.write_str(" =>")?;
        for action in &self.actions {
            match action {
                RuleAction::Assert { head, terms } => {
                    write!(f, " (assert ({head}")?;
                    for t in terms {
                        f.write_str(" ")?;
                        write_term(f, t)?;
                    }
                    f.write_str("))")?;
                }
                RuleAction::Retract(terms) => {
                    f.write_str(" (retract")?;
                    for t in terms {
                        f.write_str(" ")?;
                        write_term(f, t)?;
                    }
                    f.write_str(")")?;
                }
                RuleAction::Printout(terms) => {
                    f.write_str(" (printout t")?;
                    for t in terms {
                        f.write_str(" ")?;
                        write_term(f, t)?;
                    }
                    f.write_str(")")?;
                }
            }
        }
        f.write_str(")")
    }
}

impl fmt::Display for Deffacts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(deffacts {}", self.name)?;
        for (head, slots) in &self.facts {
            write!(f, " ({head}")?;
            for s in slots {
                write!(f, " {s}")?;
            }
            f.write_str(")")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunLimit {
    Unbounded,
    Cycles(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WatchCategory {
    Facts,
    Rules,
    Activations,
}

impl WatchCategory {
    /// Parses a category name; `all` expands to every category.
    pub fn parse_list(name: &str) -> Result<Vec<WatchCategory>, EngineError> {
        match name.trim() {
            "facts" => Ok(vec![WatchCategory::Facts]),
            "rules" => Ok(vec![WatchCategory::Rules]),
            "activations" => Ok(vec![WatchCategory::Activations]),
            "all" => Ok(vec![
                WatchCategory::Facts,
                WatchCategory::Rules,
                WatchCategory::Activations,
            ]),
            other => Err(EngineError::Eval(format!("cannot watch `{other}`"))),
        }
    }
}

/// Technology-neutral interface between an agent and its rule engine.
pub trait RuleEngine: Send {
    /// Loads `defrule` / `deffacts` constructs; returns how many were loaded.
    fn load_program(&mut self, source: &str) -> Result<usize, EngineError>;

    /// Loads exactly one construct.
    fn build(&mut self, construct: &str) -> Result<(), EngineError>;

    /// Asserts every fact form in `source`; returns the number of new facts.
    fn assert_facts(&mut self, source: &str) -> Result<usize, EngineError>;

    /// Asserts one fact form; `None` when an identical fact already exists.
    fn assert_string(&mut self, fact: &str) -> Result<Option<usize>, EngineError>;

    /// Runs one shell command and returns its console output.
    fn eval(&mut self, command: &str) -> Result<String, EngineError>;

    fn run(&mut self, limit: RunLimit) -> Result<usize, EngineError>;

    fn reset(&mut self);

    fn clear(&mut self);

    fn snapshot(&self, format: SnapshotFormat) -> Snapshot;

    fn restore(&mut self, snapshot: &Snapshot) -> Result<(), EngineError>;

    /// Position 0 is the head, position k the k-th slot.
    fn fact_slot(&self, fact_index: usize, position: usize) -> Result<Atom, EngineError>;

    /// Moves the fact cursor by `delta`, clamping at both ends; returns the
    /// index of the fact under the cursor.
    fn move_cursor(&mut self, delta: i64) -> Result<usize, EngineError>;

    fn set_watch(&mut self, category: WatchCategory, enabled: bool);

    fn input_buffer(&self) -> &str;

    fn append_input_buffer(&mut self, text: &str);

    /// Drains console output produced outside `eval` (firings, watch traces).
    fn take_output(&mut self) -> String;
}
